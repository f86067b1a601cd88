#include "sicd/run_config.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "sicd/errors.hpp"

namespace sicd {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& name, const std::string& what) {
  throw InvalidInput(name + ": " + what);
}

[[noreturn]] void fail_key(const std::string& name, const std::string& where,
                           const std::string& what) {
  fail(name, "config key \"" + where + "\": " + what);
}

std::string joined(const std::string& where, const std::string& key) {
  return where.empty() ? key : where + "." + key;
}

void check_keys(const json& obj, const std::string& name,
                const std::string& where,
                std::initializer_list<const char*> allowed) {
  for (const auto& item : obj.items()) {
    bool known = false;
    for (const char* key : allowed)
      if (item.key() == key) {
        known = true;
        break;
      }
    if (!known)
      fail(name, "unknown config key \"" + joined(where, item.key()) + "\"");
  }
}

// Present-and-not-null lookup; null means "keep the default".
const json* find(const json& obj, const char* key) {
  const auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return nullptr;
  return &*it;
}

double as_double(const json& j, const std::string& name,
                 const std::string& where) {
  if (!j.is_number()) fail_key(name, where, "expected a number");
  return j.get<double>();
}

int as_int(const json& j, const std::string& name, const std::string& where) {
  if (!j.is_number_integer()) fail_key(name, where, "expected an integer");
  return j.get<int>();
}

std::uint64_t as_u64(const json& j, const std::string& name,
                     const std::string& where) {
  if (!j.is_number_unsigned())
    fail_key(name, where, "expected an unsigned integer");
  return j.get<std::uint64_t>();
}

bool as_bool(const json& j, const std::string& name,
             const std::string& where) {
  if (!j.is_boolean()) fail_key(name, where, "expected true or false");
  return j.get<bool>();
}

std::string as_string(const json& j, const std::string& name,
                      const std::string& where) {
  if (!j.is_string()) fail_key(name, where, "expected a string");
  return j.get<std::string>();
}

std::vector<double> as_real_vector(const json& j, const std::string& name,
                                   const std::string& where) {
  if (!j.is_array()) fail_key(name, where, "expected an array of numbers");
  std::vector<double> out;
  out.reserve(j.size());
  for (std::size_t k = 0; k < j.size(); ++k)
    out.push_back(
        as_double(j[k], name, where + "[" + std::to_string(k) + "]"));
  return out;
}

Eigen::VectorXd as_eigen_vector(const json& j, const std::string& name,
                                const std::string& where) {
  const std::vector<double> v = as_real_vector(j, name, where);
  return Eigen::Map<const Eigen::VectorXd>(
      v.data(), static_cast<Eigen::Index>(v.size()));
}

void parse_optimizer(const json& obj, OptimizerConfig& opt,
                     const std::string& name, const std::string& where) {
  if (!obj.is_object()) fail_key(name, where, "expected an object");
  check_keys(obj, name, where,
             {"max_iters", "x_tolerance", "f_tolerance", "restarts"});
  if (const json* j = find(obj, "max_iters"))
    opt.max_iters = as_int(*j, name, joined(where, "max_iters"));
  if (const json* j = find(obj, "x_tolerance"))
    opt.x_tolerance = as_double(*j, name, joined(where, "x_tolerance"));
  if (const json* j = find(obj, "f_tolerance"))
    opt.f_tolerance = as_double(*j, name, joined(where, "f_tolerance"));
  if (const json* j = find(obj, "restarts"))
    opt.restarts = as_int(*j, name, joined(where, "restarts"));
}

void parse_fit(const json& obj, FitConfig& fit, const std::string& name,
               const std::string& where) {
  if (!obj.is_object()) fail_key(name, where, "expected an object");
  check_keys(obj, name, where,
             {"box", "trim_level", "h0", "h_grid", "tau_grid",
              "neighborhood_radius", "optimizer", "seed", "leave_one_out",
              "exact_cv_per_theta", "quadrature_points"});
  if (const json* b = find(obj, "box")) {
    const std::string bw = joined(where, "box");
    if (!b->is_object()) fail_key(name, bw, "expected an object");
    check_keys(*b, name, bw, {"lower", "upper"});
    const json* lo = find(*b, "lower");
    const json* hi = find(*b, "upper");
    if (!lo || !hi)
      fail_key(name, bw, "needs both \"lower\" and \"upper\" arrays");
    fit.box = Box(as_eigen_vector(*lo, name, joined(bw, "lower")),
                  as_eigen_vector(*hi, name, joined(bw, "upper")));
  }
  if (const json* j = find(obj, "trim_level"))
    fit.trim_level = as_double(*j, name, joined(where, "trim_level"));
  if (const json* j = find(obj, "h0"))
    fit.h0 = as_double(*j, name, joined(where, "h0"));
  if (const json* j = find(obj, "h_grid"))
    fit.h_grid = as_real_vector(*j, name, joined(where, "h_grid"));
  if (const json* j = find(obj, "tau_grid"))
    fit.tau_grid = as_real_vector(*j, name, joined(where, "tau_grid"));
  if (const json* j = find(obj, "neighborhood_radius"))
    fit.neighborhood_radius =
        as_double(*j, name, joined(where, "neighborhood_radius"));
  if (const json* j = find(obj, "optimizer"))
    parse_optimizer(*j, fit.optimizer, name, joined(where, "optimizer"));
  if (const json* j = find(obj, "seed"))
    fit.seed = as_u64(*j, name, joined(where, "seed"));
  if (const json* j = find(obj, "leave_one_out"))
    fit.leave_one_out = as_bool(*j, name, joined(where, "leave_one_out"));
  if (const json* j = find(obj, "exact_cv_per_theta"))
    fit.exact_cv_per_theta =
        as_bool(*j, name, joined(where, "exact_cv_per_theta"));
  if (const json* j = find(obj, "quadrature_points"))
    fit.quadrature_points =
        as_int(*j, name, joined(where, "quadrature_points"));
}

void parse_sim(const json& obj, SimDesign& design, const std::string& name,
               const std::string& where) {
  if (!obj.is_object()) fail_key(name, where, "expected an object");
  check_keys(obj, name, where,
             {"n", "theta0", "target_p", "lambda", "reps", "seed",
              "zero_noise"});
  if (const json* j = find(obj, "n"))
    design.n = as_int(*j, name, joined(where, "n"));
  if (const json* j = find(obj, "theta0"))
    design.theta0 = as_eigen_vector(*j, name, joined(where, "theta0"));
  if (const json* j = find(obj, "target_p"))
    design.target_p = as_double(*j, name, joined(where, "target_p"));
  if (const json* j = find(obj, "lambda"))
    design.lambda = as_double(*j, name, joined(where, "lambda"));
  if (const json* j = find(obj, "reps"))
    design.reps = as_int(*j, name, joined(where, "reps"));
  if (const json* j = find(obj, "seed"))
    design.seed = as_u64(*j, name, joined(where, "seed"));
  if (const json* j = find(obj, "zero_noise"))
    design.zero_noise = as_bool(*j, name, joined(where, "zero_noise"));
}

json vector_json(const Eigen::VectorXd& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

json optional_vector_json(const std::optional<std::vector<double>>& v) {
  if (!v) return json(nullptr);
  json arr = json::array();
  for (double x : *v) arr.push_back(x);
  return arr;
}

}  // namespace

const char* sim_mode_name(SimMode mode) {
  switch (mode) {
    case SimMode::adaptive:
      return "adaptive";
    case SimMode::fixed_tau0:
      return "fixed_tau0";
    case SimMode::both:
      return "both";
  }
  return "both";
}

SimMode parse_sim_mode(const std::string& name) {
  if (name == "adaptive") return SimMode::adaptive;
  if (name == "fixed_tau0") return SimMode::fixed_tau0;
  if (name == "both") return SimMode::both;
  throw InvalidInput("mode: expected \"adaptive\", \"fixed_tau0\" or "
                     "\"both\", got \"" +
                     name + "\"");
}

RunConfig parse_run_config(const std::string& text, const std::string& name) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(name, std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) fail(name, "config root: expected a JSON object");
  check_keys(doc, name, "", {"output_dir", "mode", "fit", "sim"});

  RunConfig config;
  if (const json* j = find(doc, "output_dir"))
    config.output_dir = as_string(*j, name, "output_dir");
  if (const json* j = find(doc, "mode")) {
    try {
      config.mode = parse_sim_mode(as_string(*j, name, "mode"));
    } catch (const InvalidInput& e) {
      fail(name, e.what());
    }
  }
  if (const json* j = find(doc, "fit")) parse_fit(*j, config.fit, name, "fit");
  if (const json* j = find(doc, "sim"))
    parse_sim(*j, config.design, name, "sim");
  config.design.fit_config = config.fit;
  return config;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput(path + ": cannot open config for reading");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_run_config(text.str(), path);
}

std::string run_config_to_json(const RunConfig& config) {
  json fit = json::object();
  if (config.fit.box) {
    fit["box"] = json::object();
    fit["box"]["lower"] = vector_json(config.fit.box->lo);
    fit["box"]["upper"] = vector_json(config.fit.box->hi);
  } else {
    fit["box"] = json(nullptr);
  }
  fit["trim_level"] =
      config.fit.trim_level ? json(*config.fit.trim_level) : json(nullptr);
  fit["h0"] = config.fit.h0 ? json(*config.fit.h0) : json(nullptr);
  fit["h_grid"] = optional_vector_json(config.fit.h_grid);
  fit["tau_grid"] = optional_vector_json(config.fit.tau_grid);
  fit["neighborhood_radius"] = config.fit.neighborhood_radius;
  fit["optimizer"] = json::object();
  fit["optimizer"]["max_iters"] = config.fit.optimizer.max_iters;
  fit["optimizer"]["x_tolerance"] = config.fit.optimizer.x_tolerance;
  fit["optimizer"]["f_tolerance"] = config.fit.optimizer.f_tolerance;
  fit["optimizer"]["restarts"] = config.fit.optimizer.restarts;
  fit["seed"] = config.fit.seed;
  fit["leave_one_out"] = config.fit.leave_one_out;
  fit["exact_cv_per_theta"] = config.fit.exact_cv_per_theta;
  fit["quadrature_points"] = config.fit.quadrature_points;

  json sim = json::object();
  sim["n"] = config.design.n;
  sim["theta0"] = vector_json(config.design.theta0);
  sim["target_p"] = config.design.target_p;
  sim["lambda"] = config.design.lambda;
  sim["reps"] = config.design.reps;
  sim["seed"] = config.design.seed;
  sim["zero_noise"] = config.design.zero_noise;

  json doc = json::object();
  doc["output_dir"] = config.output_dir;
  doc["mode"] = sim_mode_name(config.mode);
  doc["fit"] = fit;
  doc["sim"] = sim;
  return doc.dump(2) + "\n";
}

void apply_seed_override(RunConfig& config, const std::string& value) {
  std::uint64_t seed = 0;
  const char* first = value.data();
  const char* last = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(first, last, seed);
  if (ec != std::errc{} || ptr != last)
    throw InvalidInput("SICD_SEED: expected an unsigned integer, got \"" +
                       value + "\"");
  config.fit.seed = seed;
  config.design.seed = seed;
  config.design.fit_config.seed = seed;
}

void RunConfig::apply_env_seed_override() {
  if (const char* value = std::getenv("SICD_SEED"))
    apply_seed_override(*this, value);
}

}  // namespace sicd
