#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sicd/dataset_io.hpp"
#include "sicd/errors.hpp"
#include "sicd/report.hpp"
#include "sicd/run_config.hpp"
#include "sicd/simd/kernel_ops.hpp"

namespace {

using namespace sicd;

Eigen::VectorXd to_eigen(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(),
                                           static_cast<Eigen::Index>(v.size()));
}

// Fit-configuration flags attached to every subcommand. Only flags actually
// passed override the configuration document.
struct FitOverrides {
  std::vector<double> box_lower, box_upper, h_grid, tau_grid;
  double trim_level = 0.0, h0 = 0.0, radius = 0.0, x_tol = 0.0, f_tol = 0.0;
  std::uint64_t seed = 0;
  int max_iters = 0, restarts = 0, quadrature = 0;
  bool loo = false, no_loo = false, exact_cv = false, no_exact_cv = false;

  CLI::Option* o_box_lower = nullptr;
  CLI::Option* o_box_upper = nullptr;
  CLI::Option* o_h_grid = nullptr;
  CLI::Option* o_tau_grid = nullptr;
  CLI::Option* o_trim = nullptr;
  CLI::Option* o_h0 = nullptr;
  CLI::Option* o_radius = nullptr;
  CLI::Option* o_x_tol = nullptr;
  CLI::Option* o_f_tol = nullptr;
  CLI::Option* o_seed = nullptr;
  CLI::Option* o_max_iters = nullptr;
  CLI::Option* o_restarts = nullptr;
  CLI::Option* o_quadrature = nullptr;
  CLI::Option* o_loo = nullptr;
  CLI::Option* o_no_loo = nullptr;
  CLI::Option* o_exact = nullptr;
  CLI::Option* o_no_exact = nullptr;

  void attach(CLI::App* cmd) {
    o_box_lower = cmd->add_option("--box-lower", box_lower,
                                  "preliminary covariate box, lower corner "
                                  "(comma separated)")
                      ->delimiter(',');
    o_box_upper = cmd->add_option("--box-upper", box_upper,
                                  "preliminary covariate box, upper corner")
                      ->delimiter(',');
    o_trim = cmd->add_option("--trim-level", trim_level,
                             "density trimming level c (default: 5th "
                             "percentile of the pilot index density)");
    o_h0 = cmd->add_option("--h0", h0,
                           "pilot bandwidth (default: sd(z) * n^(-1/7))");
    o_h_grid = cmd->add_option("--h-grid", h_grid,
                               "bandwidth candidates (default: log-spaced "
                               "around the index scale)")
                   ->delimiter(',');
    o_tau_grid = cmd->add_option("--tau-grid", tau_grid,
                                 "truncation candidates (default: upper "
                                 "deciles of the uncensored follow-ups)")
                     ->delimiter(',');
    o_radius = cmd->add_option("--radius", radius,
                               "stage-two search ball radius around the "
                               "preliminary index");
    o_seed = cmd->add_option("--seed", seed, "fit seed (optimizer restarts)");
    o_max_iters =
        cmd->add_option("--max-iters", max_iters, "simplex iteration cap");
    o_x_tol = cmd->add_option("--x-tol", x_tol, "simplex spread tolerance");
    o_f_tol = cmd->add_option("--f-tol", f_tol, "simplex value tolerance");
    o_restarts = cmd->add_option("--restarts", restarts,
                                 "jittered optimizer restarts");
    o_quadrature = cmd->add_option("--quadrature-points", quadrature,
                                   "cross-validation quadrature grid size");
    o_loo = cmd->add_flag("--leave-one-out", loo,
                          "leave-one-out objective (default)");
    o_no_loo = cmd->add_flag("--no-leave-one-out", no_loo,
                             "plug-in objective without leave-one-out");
    o_no_loo->excludes(o_loo);
    o_exact = cmd->add_flag("--exact-cv", exact_cv,
                            "re-select the bandwidth at every candidate "
                            "index (small n)");
    o_no_exact = cmd->add_flag("--no-exact-cv", no_exact_cv,
                               "alternate bandwidth selection and index "
                               "maximization (default)");
    o_no_exact->excludes(o_exact);
  }

  void apply(FitConfig& fit) const {
    if (o_box_lower->count() || o_box_upper->count()) {
      if (!o_box_lower->count() || !o_box_upper->count())
        throw InvalidInput(
            "--box-lower and --box-upper must be given together");
      fit.box = Box(to_eigen(box_lower), to_eigen(box_upper));
    }
    if (o_trim->count()) fit.trim_level = trim_level;
    if (o_h0->count()) fit.h0 = h0;
    if (o_h_grid->count()) fit.h_grid = h_grid;
    if (o_tau_grid->count()) fit.tau_grid = tau_grid;
    if (o_radius->count()) fit.neighborhood_radius = radius;
    if (o_seed->count()) fit.seed = seed;
    if (o_max_iters->count()) fit.optimizer.max_iters = max_iters;
    if (o_x_tol->count()) fit.optimizer.x_tolerance = x_tol;
    if (o_f_tol->count()) fit.optimizer.f_tolerance = f_tol;
    if (o_restarts->count()) fit.optimizer.restarts = restarts;
    if (o_quadrature->count()) fit.quadrature_points = quadrature;
    if (o_loo->count()) fit.leave_one_out = true;
    if (o_no_loo->count()) fit.leave_one_out = false;
    if (o_exact->count()) fit.exact_cv_per_theta = true;
    if (o_no_exact->count()) fit.exact_cv_per_theta = false;
  }
};

// Simulation-design flags (simulate subcommand only).
struct SimOverrides {
  int n = 0, reps = 0;
  double target_p = 0.0, lambda = 0.0;
  std::vector<double> theta0;
  std::uint64_t seed = 0;
  bool zero_noise = false;

  CLI::Option* o_n = nullptr;
  CLI::Option* o_reps = nullptr;
  CLI::Option* o_target_p = nullptr;
  CLI::Option* o_lambda = nullptr;
  CLI::Option* o_theta0 = nullptr;
  CLI::Option* o_seed = nullptr;
  CLI::Option* o_zero_noise = nullptr;

  void attach(CLI::App* cmd) {
    o_n = cmd->add_option("--n", n, "observations per replication");
    o_reps = cmd->add_option("--reps", reps, "number of replications");
    o_target_p = cmd->add_option("--target-p", target_p,
                                 "desired censoring proportion (rate is "
                                 "calibrated unless --lambda is given)");
    o_lambda = cmd->add_option("--lambda", lambda,
                               "exponential censoring rate (0 = none)");
    o_theta0 = cmd->add_option("--theta0", theta0,
                               "design index coefficients, first pinned to 1")
                   ->delimiter(',');
    o_seed = cmd->add_option("--sim-seed", seed, "replication data seed");
    o_zero_noise = cmd->add_flag("--zero-noise", zero_noise,
                                 "deterministic responses (sanity mode)");
  }

  void apply(SimDesign& design) const {
    if (o_n->count()) design.n = n;
    if (o_reps->count()) design.reps = reps;
    if (o_target_p->count()) design.target_p = target_p;
    if (o_lambda->count()) design.lambda = lambda;
    if (o_theta0->count()) design.theta0 = to_eigen(theta0);
    if (o_seed->count()) design.seed = seed;
    if (o_zero_noise->count()) design.zero_noise = true;
  }
};

std::filesystem::path prepare_output_dir(const std::string& dir) {
  const std::filesystem::path out(dir.empty() ? "." : dir);
  std::error_code ec;
  std::filesystem::create_directories(out, ec);
  if (ec)
    throw InvalidInput(out.string() +
                       ": cannot create output directory: " + ec.message());
  return out;
}

void print_elapsed(std::chrono::steady_clock::time_point start) {
  const std::chrono::duration<double> secs =
      std::chrono::steady_clock::now() - start;
  char buf[64];
  std::snprintf(buf, sizeof(buf), "elapsed: %.2f s", secs.count());
  std::cout << buf << "\n";
}

void print_dataset_banner(const CensoredSample& sample) {
  std::cout << "dataset: " << sample.n() << " observations, d = "
            << sample.d() << ", censored: "
            << (sample.delta.array() == 0).count() << "\n";
}

int run_fit(const std::string& data_path, const RunConfig& config) {
  const CensoredSample sample = read_dataset(data_path);
  print_dataset_banner(sample);
  const auto start = std::chrono::steady_clock::now();
  const FitReport report = make_fit_report(sample, fit(sample, config.fit));
  const std::filesystem::path dir = prepare_output_dir(config.output_dir);
  const std::filesystem::path jsonl = dir / "fit_report.jsonl";
  const std::filesystem::path summary = dir / "fit_summary.txt";
  write_fit_report(jsonl.string(), report);
  const std::string text = fit_summary(report);
  {
    std::ofstream out(summary);
    if (!out) throw InvalidInput(summary.string() + ": cannot write summary");
    out << text;
  }
  std::cout << text;
  std::cout << "wrote: " << jsonl.string() << "\n";
  std::cout << "wrote: " << summary.string() << "\n";
  print_elapsed(start);
  return 0;
}

int run_simulate(const RunConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  const SimulationReport report = run_simulation(config);
  const std::filesystem::path dir = prepare_output_dir(config.output_dir);
  const std::filesystem::path jsonl = dir / "sim_report.jsonl";
  const std::filesystem::path summary = dir / "sim_summary.txt";
  write_sim_report(jsonl.string(), report);
  const std::string text = sim_summary(report);
  {
    std::ofstream out(summary);
    if (!out) throw InvalidInput(summary.string() + ": cannot write summary");
    out << text;
  }
  std::cout << text;
  std::cout << "wrote: " << jsonl.string() << "\n";
  std::cout << "wrote: " << summary.string() << "\n";
  print_elapsed(start);
  return 0;
}

int run_diagnose(const std::string& data_path, const RunConfig& config) {
  const CensoredSample sample = read_dataset(data_path);
  print_dataset_banner(sample);
  const auto start = std::chrono::steady_clock::now();
  const std::vector<DiagnoseRow> rows = diagnose_table(sample, config.fit);
  const std::filesystem::path dir = prepare_output_dir(config.output_dir);
  const std::filesystem::path jsonl = dir / "diagnose_report.jsonl";
  const std::filesystem::path summary = dir / "diagnose_summary.txt";
  write_diagnose_report(jsonl.string(), rows);
  const std::string text = diagnose_summary(rows);
  {
    std::ofstream out(summary);
    if (!out) throw InvalidInput(summary.string() + ": cannot write summary");
    out << text;
  }
  std::cout << text;
  std::cout << "wrote: " << jsonl.string() << "\n";
  std::cout << "wrote: " << summary.string() << "\n";
  print_elapsed(start);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "sicd: single-index conditional-density regression under random "
      "right censoring"};
  app.require_subcommand(1);
  app.footer(
      "Environment: SICD_SEED overrides every configured seed; SICD_SIMD "
      "selects the kernel backend (scalar, avx2, auto).");

  std::string config_path, output_dir, data_fit, data_diag, mode;

  CLI::App* cmd_fit = app.add_subcommand(
      "fit", "estimate the index on a censored dataset");
  cmd_fit->add_option("--data", data_fit,
                      "dataset file (header z,delta,x1,...)")
      ->required();
  cmd_fit->add_option("--config", config_path, "JSON run configuration");
  cmd_fit->add_option("--output", output_dir, "report directory");
  FitOverrides fit_flags;
  fit_flags.attach(cmd_fit);

  CLI::App* cmd_sim = app.add_subcommand(
      "simulate", "run the configured Monte Carlo study");
  cmd_sim->add_option("--config", config_path, "JSON run configuration");
  cmd_sim->add_option("--output", output_dir, "report directory");
  cmd_sim->add_option("--mode", mode,
                      "estimators to run: adaptive, fixed_tau0 or both");
  FitOverrides sim_fit_flags;
  sim_fit_flags.attach(cmd_sim);
  SimOverrides sim_flags;
  sim_flags.attach(cmd_sim);

  CLI::App* cmd_diag = app.add_subcommand(
      "diagnose", "sweep the truncation grid and report each branch");
  cmd_diag->add_option("--data", data_diag,
                       "dataset file (header z,delta,x1,...)")
      ->required();
  cmd_diag->add_option("--config", config_path, "JSON run configuration");
  cmd_diag->add_option("--output", output_dir, "report directory");
  FitOverrides diag_flags;
  diag_flags.attach(cmd_diag);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;  // bad usage is an input error
  }

  try {
    std::cout << "backend: " << simd::backend_name(simd::active_backend())
              << "\n";
    RunConfig config =
        config_path.empty() ? RunConfig{} : load_run_config(config_path);
    if (!output_dir.empty()) config.output_dir = output_dir;
    if (cmd_fit->parsed()) {
      fit_flags.apply(config.fit);
    } else if (cmd_sim->parsed()) {
      sim_fit_flags.apply(config.fit);
      sim_flags.apply(config.design);
      if (!mode.empty()) config.mode = parse_sim_mode(mode);
    } else if (cmd_diag->parsed()) {
      diag_flags.apply(config.fit);
    }
    config.design.fit_config = config.fit;
    config.apply_env_seed_override();

    if (cmd_fit->parsed()) return run_fit(data_fit, config);
    if (cmd_sim->parsed()) return run_simulate(config);
    return run_diagnose(data_diag, config);
  } catch (const InvalidInput& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 4;
  }
}
