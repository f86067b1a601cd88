#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "sicd/censored_sample.hpp"
#include "sicd/fitter.hpp"
#include "sicd/run_config.hpp"
#include "sicd/sim.hpp"

namespace sicd {

// Reports are persisted as line-delimited JSON records (machine-parseable,
// one object per line) next to a flat human-readable summary. Report files
// carry data only -- no timing, hosts or paths -- so identical inputs yield
// byte-identical files, and every number is written in shortest round-trip
// form so a re-read reproduces the values bitwise.

// Everything the fit command persists.
struct FitReport {
  Eigen::Index n = 0;
  Eigen::Index d = 0;
  IndexModelFit fit;
  StandardErrors errors;
  std::vector<std::string> flags;  // data quirks worth surfacing
};

FitReport make_fit_report(const CensoredSample& sample, IndexModelFit fit);

void write_fit_report(std::ostream& out, const FitReport& report);
void write_fit_report(const std::string& path, const FitReport& report);
FitReport read_fit_report(std::istream& in, const std::string& name);
FitReport read_fit_report(const std::string& path);
std::string fit_summary(const FitReport& report);

// One truncation candidate of the diagnostic sweep: the pipeline branch
// pinned at tau, with the retained count and the largest-uncensored
// product-limit weight before and after truncating there.
struct DiagnoseRow {
  double tau = 0.0;
  bool ok = false;
  std::string error;      // failure reason when !ok
  Eigen::VectorXd theta;  // branch index estimate
  double h = 0.0;
  double e2 = 0.0;
  Eigen::Index retained = 0;
  double weight_full = 0.0;
  double weight_trunc = 0.0;
};

// Runs the fixed-truncation branch at every candidate of the resolved tau
// grid (the configured one, or the upper-decile default). Per-candidate
// failures are recorded in the row, not thrown.
std::vector<DiagnoseRow> diagnose_table(const CensoredSample& sample,
                                        const FitConfig& config);

void write_diagnose_report(std::ostream& out,
                           const std::vector<DiagnoseRow>& rows);
void write_diagnose_report(const std::string& path,
                           const std::vector<DiagnoseRow>& rows);
std::vector<DiagnoseRow> read_diagnose_report(std::istream& in,
                                              const std::string& name);
std::vector<DiagnoseRow> read_diagnose_report(const std::string& path);
std::string diagnose_summary(const std::vector<DiagnoseRow>& rows);

// Everything the simulate command persists: the design echo plus one Monte
// Carlo aggregate (with per-replication records) per estimator run.
struct SimulationReport {
  SimDesign design;
  SimMode mode = SimMode::both;
  std::optional<MonteCarloReport> adaptive;
  std::optional<MonteCarloReport> fixed_tau0;
};

// Runs the configured study: the adaptive-truncation estimator, the
// fixed-safe-truncation comparator, or both on common replication data.
SimulationReport run_simulation(const RunConfig& config);

void write_sim_report(std::ostream& out, const SimulationReport& report);
void write_sim_report(const std::string& path, const SimulationReport& report);
SimulationReport read_sim_report(std::istream& in, const std::string& name);
SimulationReport read_sim_report(const std::string& path);
std::string sim_summary(const SimulationReport& report);

}  // namespace sicd
