#pragma once

#include <string>

#include "sicd/fitter.hpp"
#include "sicd/sim.hpp"

namespace sicd {

// Which estimator(s) a simulation runs per replication.
enum class SimMode { adaptive, fixed_tau0, both };

const char* sim_mode_name(SimMode mode);
SimMode parse_sim_mode(const std::string& name);  // InvalidInput otherwise

// Run configuration document (JSON object). Top-level keys, all optional:
//   output_dir : string, directory reports are written to (default ".")
//   mode       : "adaptive" | "fixed_tau0" | "both" (simulate only)
//   fit        : object mapping 1:1 onto FitConfig
//   sim        : object mapping 1:1 onto SimDesign (minus its fit config,
//                which always mirrors `fit`)
// Absent or null keys keep the defaults below; unknown keys are rejected
// with their dotted location. The fit object accepts box{lower,upper},
// trim_level, h0, h_grid, tau_grid, neighborhood_radius,
// optimizer{max_iters,x_tolerance,f_tolerance,restarts}, seed,
// leave_one_out, exact_cv_per_theta and quadrature_points; the sim object
// accepts n, theta0, target_p, lambda, reps, seed and zero_noise.
struct RunConfig {
  std::string output_dir = ".";
  SimMode mode = SimMode::both;
  FitConfig fit;
  SimDesign design;  // design.fit_config mirrors `fit`

  // When the SICD_SEED environment variable is set, it overrides every seed
  // in the document (fit and simulation alike).
  void apply_env_seed_override();
};

RunConfig parse_run_config(const std::string& text, const std::string& name);
RunConfig load_run_config(const std::string& path);

// Serializes every field explicitly (defaults included, absent optionals as
// null) so that parse(serialize(c)) reproduces c bitwise.
std::string run_config_to_json(const RunConfig& config);

// Applies one seed value everywhere, as the environment override does.
void apply_seed_override(RunConfig& config, const std::string& value);

}  // namespace sicd
