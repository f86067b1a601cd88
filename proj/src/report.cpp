#include "sicd/report.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "sicd/dataset_io.hpp"
#include "sicd/errors.hpp"
#include "sicd/selection.hpp"
#include "sicd/survival.hpp"

namespace sicd {

namespace {

using nlohmann::json;

json vector_json(const Eigen::VectorXd& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

// Matrices are flattened row-major next to their dimensions.
json matrix_json(const Eigen::MatrixXd& m) {
  json obj = json::object();
  obj["rows"] = m.rows();
  obj["cols"] = m.cols();
  json values = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) values.push_back(m(r, c));
  obj["values"] = values;
  return obj;
}

Eigen::VectorXd vector_from_json(const json& arr) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(arr.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i)
    v[i] = arr.at(static_cast<std::size_t>(i)).get<double>();
  return v;
}

Eigen::MatrixXd matrix_from_json(const json& obj) {
  const auto rows = obj.at("rows").get<Eigen::Index>();
  const auto cols = obj.at("cols").get<Eigen::Index>();
  const json& values = obj.at("values");
  if (static_cast<Eigen::Index>(values.size()) != rows * cols)
    throw InvalidInput("matrix record: rows*cols does not match the values");
  Eigen::MatrixXd m(rows, cols);
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = values.at(k++).get<double>();
  return m;
}

// One JSON record per line; numbers in shortest round-trip form.
void emit(std::ostream& out, const json& record) { out << record.dump() << '\n'; }

// Reads a line-delimited JSON stream, applying `handle` to each record.
template <typename Handler>
void read_records(std::istream& in, const std::string& name, Handler&& handle) {
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    try {
      const json record = json::parse(line);
      const std::string kind = record.at("record").get<std::string>();
      handle(kind, record);
    } catch (const json::exception& e) {
      throw InvalidInput(name + ": line " + std::to_string(line_no) + ": " +
                         e.what());
    }
  }
}

[[noreturn]] void missing_record(const std::string& name, const char* kind) {
  throw InvalidInput(name + ": missing \"" + std::string(kind) + "\" record");
}

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

std::string vector_text(const Eigen::VectorXd& v) {
  std::string out;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) out += "  ";
    out += fixed6(v[i]);
  }
  return out.empty() ? "(none)" : out;
}

void open_for_writing(std::ofstream& out, const std::string& path) {
  out.open(path);
  if (!out) throw InvalidInput(path + ": cannot open report for writing");
}

void check_written(std::ofstream& out, const std::string& path) {
  out.flush();
  if (!out) throw InvalidInput(path + ": write failed");
}

std::ifstream open_for_reading(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput(path + ": cannot open report for reading");
  return in;
}

}  // namespace

FitReport make_fit_report(const CensoredSample& sample, IndexModelFit fit) {
  FitReport report;
  report.n = sample.n();
  report.d = sample.d();
  report.errors = standard_errors(fit, sample.n());
  report.fit = std::move(fit);
  if ((sample.delta.array() == 1).all())
    report.flags.push_back("no censoring: KM path degenerate to empirical");
  return report;
}

void write_fit_report(std::ostream& out, const FitReport& report) {
  json rec = json::object();
  rec["record"] = "fit";
  rec["n"] = report.n;
  rec["d"] = report.d;
  rec["theta_hat"] = vector_json(report.fit.theta_hat);
  rec["theta_prelim"] = vector_json(report.fit.theta_prelim);
  rec["h_hat"] = report.fit.h_hat;
  rec["tau_hat"] = report.fit.tau_hat;
  rec["h0"] = report.fit.h0;
  rec["tau0"] = report.fit.tau0;
  rec["trim_level"] = report.fit.trim_level;
  rec["contributing"] = report.fit.contributing;
  rec["excluded"] = report.fit.excluded;
  rec["sigma_singular"] = report.fit.sigma_singular;
  rec["se_singular"] = report.errors.singular;
  rec["alternations"] = report.fit.convergence.alternations;
  rec["fixed_point"] = report.fit.convergence.fixed_point;
  rec["optimizer_iterations"] = report.fit.convergence.optimizer_iterations;
  rec["optimizer_evaluations"] = report.fit.convergence.optimizer_evaluations;
  rec["optimizer_converged"] = report.fit.convergence.optimizer_converged;
  rec["flags"] = report.flags;
  emit(out, rec);

  const TruncationSelection& sel = report.fit.e2_table;
  for (std::size_t k = 0; k < sel.table.size(); ++k) {
    const auto& entry = sel.table[k];
    json row = json::object();
    row["record"] = "truncation";
    row["tau"] = entry.tau;
    row["e2"] = entry.e2;
    row["ok"] = entry.ok;
    row["message"] = entry.message;
    row["chosen"] = static_cast<int>(k) == sel.chosen_index;
    emit(out, row);
  }

  const std::pair<const char*, const Eigen::MatrixXd*> matrices[] = {
      {"V_hat", &report.fit.V_hat},
      {"Delta_hat", &report.fit.Delta_hat},
      {"Sigma_hat", &report.fit.Sigma_hat},
      {"sigma_over_n", &report.errors.sigma_over_n},
  };
  for (const auto& [label, matrix] : matrices) {
    json row = matrix_json(*matrix);
    row["record"] = "matrix";
    row["name"] = label;
    emit(out, row);
  }

  json se = json::object();
  se["record"] = "vector";
  se["name"] = "se";
  se["values"] = vector_json(report.errors.se);
  emit(out, se);
}

FitReport read_fit_report(std::istream& in, const std::string& name) {
  FitReport report;
  bool saw_fit = false, saw_se = false;
  read_records(in, name, [&](const std::string& kind, const json& rec) {
    if (kind == "fit") {
      saw_fit = true;
      report.n = rec.at("n").get<Eigen::Index>();
      report.d = rec.at("d").get<Eigen::Index>();
      report.fit.theta_hat = vector_from_json(rec.at("theta_hat"));
      report.fit.theta_prelim = vector_from_json(rec.at("theta_prelim"));
      report.fit.h_hat = rec.at("h_hat").get<double>();
      report.fit.tau_hat = rec.at("tau_hat").get<double>();
      report.fit.h0 = rec.at("h0").get<double>();
      report.fit.tau0 = rec.at("tau0").get<double>();
      report.fit.trim_level = rec.at("trim_level").get<double>();
      report.fit.contributing = rec.at("contributing").get<int>();
      report.fit.excluded = rec.at("excluded").get<int>();
      report.fit.sigma_singular = rec.at("sigma_singular").get<bool>();
      report.errors.singular = rec.at("se_singular").get<bool>();
      report.fit.convergence.alternations = rec.at("alternations").get<int>();
      report.fit.convergence.fixed_point = rec.at("fixed_point").get<bool>();
      report.fit.convergence.optimizer_iterations =
          rec.at("optimizer_iterations").get<int>();
      report.fit.convergence.optimizer_evaluations =
          rec.at("optimizer_evaluations").get<int>();
      report.fit.convergence.optimizer_converged =
          rec.at("optimizer_converged").get<bool>();
      report.flags = rec.at("flags").get<std::vector<std::string>>();
    } else if (kind == "truncation") {
      TruncationSelection::Entry entry;
      entry.tau = rec.at("tau").get<double>();
      entry.e2 = rec.at("e2").get<double>();
      entry.ok = rec.at("ok").get<bool>();
      entry.message = rec.at("message").get<std::string>();
      if (rec.at("chosen").get<bool>())
        report.fit.e2_table.chosen_index =
            static_cast<int>(report.fit.e2_table.table.size());
      report.fit.e2_table.table.push_back(std::move(entry));
    } else if (kind == "matrix") {
      const std::string label = rec.at("name").get<std::string>();
      Eigen::MatrixXd m = matrix_from_json(rec);
      if (label == "V_hat")
        report.fit.V_hat = std::move(m);
      else if (label == "Delta_hat")
        report.fit.Delta_hat = std::move(m);
      else if (label == "Sigma_hat")
        report.fit.Sigma_hat = std::move(m);
      else if (label == "sigma_over_n")
        report.errors.sigma_over_n = std::move(m);
      else
        throw InvalidInput("unknown matrix \"" + label + "\"");
    } else if (kind == "vector") {
      if (rec.at("name").get<std::string>() != "se")
        throw InvalidInput("unknown vector record");
      saw_se = true;
      report.errors.se = vector_from_json(rec.at("values"));
    } else {
      throw InvalidInput("unknown record type \"" + kind + "\"");
    }
  });
  if (!saw_fit) missing_record(name, "fit");
  if (!saw_se) missing_record(name, "vector");
  report.fit.e2_table.tau = report.fit.tau_hat;
  return report;
}

std::string fit_summary(const FitReport& report) {
  std::ostringstream out;
  out << "single-index conditional density fit\n";
  out << "observations:        " << report.n << " (d = " << report.d << ")\n";
  out << "index theta_hat:     " << vector_text(report.fit.theta_hat) << "\n";
  out << "preliminary theta_n: " << vector_text(report.fit.theta_prelim)
      << "\n";
  out << "standard errors:     " << vector_text(report.errors.se)
      << (report.errors.singular ? "  (singular curvature: pseudo-inverse)"
                                 : "")
      << "\n";
  out << "bandwidth h_hat:     " << fixed6(report.fit.h_hat)
      << "  (pilot h0: " << fixed6(report.fit.h0) << ")\n";
  out << "truncation tau_hat:  " << fixed6(report.fit.tau_hat)
      << "  (safe default tau0: " << fixed6(report.fit.tau0) << ")\n";
  out << "trim level:          " << fixed6(report.fit.trim_level) << "\n";
  out << "objective terms:     " << report.fit.contributing
      << " contributing, " << report.fit.excluded << " trimmed\n";
  out << "alternation:         " << report.fit.convergence.alternations
      << " round(s), fixed point: "
      << (report.fit.convergence.fixed_point ? "yes" : "no") << "\n";
  out << "truncation criterion table:\n";
  for (std::size_t k = 0; k < report.fit.e2_table.table.size(); ++k) {
    const auto& entry = report.fit.e2_table.table[k];
    out << "  tau = " << fixed6(entry.tau) << "  ";
    if (entry.ok)
      out << "E2 = " << fixed6(entry.e2);
    else
      out << "failed: " << entry.message;
    if (static_cast<int>(k) == report.fit.e2_table.chosen_index)
      out << "  <- selected";
    out << "\n";
  }
  for (const std::string& flag : report.flags) out << "note: " << flag << "\n";
  return out.str();
}

void write_fit_report(const std::string& path, const FitReport& report) {
  std::ofstream out;
  open_for_writing(out, path);
  write_fit_report(out, report);
  check_written(out, path);
}

FitReport read_fit_report(const std::string& path) {
  std::ifstream in = open_for_reading(path);
  return read_fit_report(in, path);
}

std::vector<DiagnoseRow> diagnose_table(const CensoredSample& sample,
                                        const FitConfig& config) {
  config.validate();
  sample.validate();
  const double tau0 = default_tau0(sample);
  const std::vector<double> tau_grid =
      config.tau_grid ? *config.tau_grid : default_tau_grid(sample, tau0);

  std::vector<DiagnoseRow> rows;
  rows.reserve(tau_grid.size());
  for (const double tau : tau_grid) {
    DiagnoseRow row;
    row.tau = tau;
    try {
      const IndexModelFit branch = fixed_tau_fit(sample, config, tau);
      row.ok = true;
      row.theta = branch.theta_hat;
      row.h = branch.h_hat;
      row.e2 = branch.e2_table.table.at(0).e2;
    } catch (const Error& e) {
      row.error = e.what();
    }
    const TruncationWeights tw = truncation_weights(sample, tau);
    row.retained = tw.retained;
    row.weight_full = tw.full;
    row.weight_trunc = tw.truncated;
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_diagnose_report(std::ostream& out,
                           const std::vector<DiagnoseRow>& rows) {
  for (const DiagnoseRow& row : rows) {
    json rec = json::object();
    rec["record"] = "truncation_branch";
    rec["tau"] = row.tau;
    rec["ok"] = row.ok;
    rec["error"] = row.error;
    rec["theta"] = vector_json(row.theta);
    rec["h"] = row.h;
    rec["e2"] = row.e2;
    rec["retained"] = row.retained;
    rec["weight_full"] = row.weight_full;
    rec["weight_trunc"] = row.weight_trunc;
    emit(out, rec);
  }
}

std::vector<DiagnoseRow> read_diagnose_report(std::istream& in,
                                              const std::string& name) {
  std::vector<DiagnoseRow> rows;
  read_records(in, name, [&](const std::string& kind, const json& rec) {
    if (kind != "truncation_branch")
      throw InvalidInput("unknown record type \"" + kind + "\"");
    DiagnoseRow row;
    row.tau = rec.at("tau").get<double>();
    row.ok = rec.at("ok").get<bool>();
    row.error = rec.at("error").get<std::string>();
    row.theta = vector_from_json(rec.at("theta"));
    row.h = rec.at("h").get<double>();
    row.e2 = rec.at("e2").get<double>();
    row.retained = rec.at("retained").get<Eigen::Index>();
    row.weight_full = rec.at("weight_full").get<double>();
    row.weight_trunc = rec.at("weight_trunc").get<double>();
    rows.push_back(std::move(row));
  });
  return rows;
}

std::string diagnose_summary(const std::vector<DiagnoseRow>& rows) {
  std::ostringstream out;
  out << "truncation diagnostics (one pipeline branch per candidate tau)\n";
  char line[160];
  std::snprintf(line, sizeof(line), "%12s %12s %12s %6s %12s %12s  %s\n",
                "tau", "E2", "h", "N", "Weight_inf", "Weight_tau",
                "theta_hat");
  out << line;
  for (const DiagnoseRow& row : rows) {
    if (row.ok) {
      std::snprintf(line, sizeof(line), "%12.6g %12.6g %12.6g %6lld %12.6g %12.6g  ",
                    row.tau, row.e2, row.h,
                    static_cast<long long>(row.retained), row.weight_full,
                    row.weight_trunc);
      out << line << vector_text(row.theta) << "\n";
    } else {
      std::snprintf(line, sizeof(line), "%12.6g  failed: ", row.tau);
      out << line << row.error << "\n";
    }
  }
  return out.str();
}

void write_diagnose_report(const std::string& path,
                           const std::vector<DiagnoseRow>& rows) {
  std::ofstream out;
  open_for_writing(out, path);
  write_diagnose_report(out, rows);
  check_written(out, path);
}

std::vector<DiagnoseRow> read_diagnose_report(const std::string& path) {
  std::ifstream in = open_for_reading(path);
  return read_diagnose_report(in, path);
}

SimulationReport run_simulation(const RunConfig& config) {
  SimulationReport report;
  report.design = config.design;
  report.mode = config.mode;
  if (config.mode != SimMode::fixed_tau0)
    report.adaptive = monte_carlo_report(config.design, FitMode::adaptive_tau);
  if (config.mode != SimMode::adaptive)
    report.fixed_tau0 =
        monte_carlo_report(config.design, FitMode::fixed_tau0);
  return report;
}

namespace {

void emit_mc(std::ostream& out, const char* estimator,
             const MonteCarloReport& mc) {
  for (const RepRecord& rep : mc.records) {
    json rec = json::object();
    rec["record"] = "replication";
    rec["estimator"] = estimator;
    rec["rep"] = rep.rep;
    rec["ok"] = rep.ok;
    rec["error"] = rep.error;
    rec["theta_hat"] = vector_json(rep.theta_hat);
    rec["h_hat"] = rep.h_hat;
    rec["tau_hat"] = rep.tau_hat;
    rec["retained"] = rep.retained;
    rec["weight_full"] = rep.weight_full;
    rec["weight_trunc"] = rep.weight_trunc;
    emit(out, rec);
  }
  json agg = json::object();
  agg["record"] = "aggregate";
  agg["estimator"] = estimator;
  agg["successes"] = mc.successes;
  agg["failures"] = mc.failures;
  agg["lambda"] = mc.lambda;
  agg["bias"] = vector_json(mc.bias);
  agg["covariance"] = matrix_json(mc.covariance);
  agg["mse"] = mc.mse;
  agg["mean_retained"] = mc.mean_retained;
  agg["weight_full"] = mc.weight_full;
  agg["weight_trunc"] = mc.weight_trunc;
  emit(out, agg);
}

void read_mc_replication(const json& rec, MonteCarloReport& mc) {
  RepRecord rep;
  rep.rep = rec.at("rep").get<int>();
  rep.ok = rec.at("ok").get<bool>();
  rep.error = rec.at("error").get<std::string>();
  rep.theta_hat = vector_from_json(rec.at("theta_hat"));
  rep.h_hat = rec.at("h_hat").get<double>();
  rep.tau_hat = rec.at("tau_hat").get<double>();
  rep.retained = rec.at("retained").get<int>();
  rep.weight_full = rec.at("weight_full").get<double>();
  rep.weight_trunc = rec.at("weight_trunc").get<double>();
  mc.records.push_back(std::move(rep));
}

void read_mc_aggregate(const json& rec, MonteCarloReport& mc) {
  mc.successes = rec.at("successes").get<int>();
  mc.failures = rec.at("failures").get<int>();
  mc.lambda = rec.at("lambda").get<double>();
  mc.bias = vector_from_json(rec.at("bias"));
  mc.covariance = matrix_from_json(rec.at("covariance"));
  mc.mse = rec.at("mse").get<double>();
  mc.mean_retained = rec.at("mean_retained").get<double>();
  mc.weight_full = rec.at("weight_full").get<double>();
  mc.weight_trunc = rec.at("weight_trunc").get<double>();
}

void summarize_mc(std::ostringstream& out, const char* label,
                  const MonteCarloReport& mc) {
  out << "estimator: " << label << "\n";
  out << "  replications:    " << mc.successes << " succeeded, "
      << mc.failures << " failed\n";
  out << "  bias (free):     " << vector_text(mc.bias) << "\n";
  out << "  MSE:             " << fixed6(mc.mse) << "\n";
  out << "  cov trace:       " << fixed6(mc.covariance.trace()) << "\n";
  out << "  mean retained N: " << fixed6(mc.mean_retained) << "\n";
  out << "  largest KM weight: full " << fixed6(mc.weight_full)
      << ", truncated " << fixed6(mc.weight_trunc) << "\n";
  for (const RepRecord& rep : mc.records)
    if (!rep.ok)
      out << "  failed rep " << rep.rep << ": " << rep.error << "\n";
}

}  // namespace

void write_sim_report(std::ostream& out, const SimulationReport& report) {
  json design = json::object();
  design["record"] = "design";
  design["mode"] = sim_mode_name(report.mode);
  design["n"] = report.design.n;
  design["theta0"] = vector_json(report.design.theta0);
  design["target_p"] = report.design.target_p;
  design["lambda"] = report.design.lambda;
  design["reps"] = report.design.reps;
  design["seed"] = report.design.seed;
  design["zero_noise"] = report.design.zero_noise;
  emit(out, design);

  if (report.adaptive) emit_mc(out, "adaptive", *report.adaptive);
  if (report.fixed_tau0) emit_mc(out, "fixed_tau0", *report.fixed_tau0);
  if (report.adaptive && report.fixed_tau0) {
    json cmp = json::object();
    cmp["record"] = "comparison";
    cmp["mse_adaptive"] = report.adaptive->mse;
    cmp["mse_fixed_tau0"] = report.fixed_tau0->mse;
    cmp["mse_ratio_fixed_over_adaptive"] =
        report.adaptive->mse > 0.0
            ? report.fixed_tau0->mse / report.adaptive->mse
            : 0.0;
    emit(out, cmp);
  }
}

SimulationReport read_sim_report(std::istream& in, const std::string& name) {
  SimulationReport report;
  bool saw_design = false;
  read_records(in, name, [&](const std::string& kind, const json& rec) {
    if (kind == "design") {
      saw_design = true;
      report.mode = parse_sim_mode(rec.at("mode").get<std::string>());
      report.design.n = rec.at("n").get<int>();
      report.design.theta0 = vector_from_json(rec.at("theta0"));
      report.design.target_p = rec.at("target_p").get<double>();
      report.design.lambda = rec.at("lambda").get<double>();
      report.design.reps = rec.at("reps").get<int>();
      report.design.seed = rec.at("seed").get<std::uint64_t>();
      report.design.zero_noise = rec.at("zero_noise").get<bool>();
    } else if (kind == "replication" || kind == "aggregate") {
      const std::string estimator = rec.at("estimator").get<std::string>();
      std::optional<MonteCarloReport>* slot = nullptr;
      if (estimator == "adaptive")
        slot = &report.adaptive;
      else if (estimator == "fixed_tau0")
        slot = &report.fixed_tau0;
      else
        throw InvalidInput("unknown estimator \"" + estimator + "\"");
      if (!*slot) slot->emplace();
      if (kind == "replication")
        read_mc_replication(rec, **slot);
      else
        read_mc_aggregate(rec, **slot);
    } else if (kind == "comparison") {
      // Derived values; nothing to reconstruct.
    } else {
      throw InvalidInput("unknown record type \"" + kind + "\"");
    }
  });
  if (!saw_design) missing_record(name, "design");
  return report;
}

std::string sim_summary(const SimulationReport& report) {
  std::ostringstream out;
  out << "monte carlo study: n = " << report.design.n << ", replications = "
      << report.design.reps << ", target censoring = "
      << fixed6(100.0 * report.design.target_p) << "%\n";
  out << "design index theta0: " << vector_text(report.design.theta0) << "\n";
  const double lambda = report.adaptive    ? report.adaptive->lambda
                        : report.fixed_tau0 ? report.fixed_tau0->lambda
                                            : report.design.lambda;
  out << "censoring rate:      " << fixed6(lambda) << "\n";
  if (report.adaptive) summarize_mc(out, "adaptive truncation", *report.adaptive);
  if (report.fixed_tau0)
    summarize_mc(out, "fixed safe truncation (tau0)", *report.fixed_tau0);
  if (report.adaptive && report.fixed_tau0 && report.adaptive->mse > 0.0)
    out << "MSE ratio fixed/adaptive: "
        << fixed6(report.fixed_tau0->mse / report.adaptive->mse) << "\n";
  return out.str();
}

void write_sim_report(const std::string& path, const SimulationReport& report) {
  std::ofstream out;
  open_for_writing(out, path);
  write_sim_report(out, report);
  check_written(out, path);
}

SimulationReport read_sim_report(const std::string& path) {
  std::ifstream in = open_for_reading(path);
  return read_sim_report(in, path);
}

}  // namespace sicd
