#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "sicd/censored_sample.hpp"
#include "sicd/fitter.hpp"

namespace sicd {

// Monte Carlo design: single-index responses Y = theta0'X + eps with
// heteroscedastic normal noise (conditional variance |theta0'X|), covariate
// coordinates drawn iid from the mixture 0.2 N(0,1) + 0.8 N(0.25, 2)
// (second component read as variance 2), and exponential right censoring
// C ~ Exp(lambda). lambda = 0 means no censoring (C = +infinity).
struct SimDesign {
  int n = 100;
  Eigen::VectorXd theta0 = default_theta0();
  double target_p = 0.25;  // desired censoring proportion P(Y > C)
  double lambda = 0.0;     // 0 with target_p > 0: calibrate before use
  int reps = 100;
  std::uint64_t seed = 2024;
  bool zero_noise = false;  // sanity mode: eps forced to 0
  FitConfig fit_config;

  static Eigen::VectorXd default_theta0();
  void validate() const;
};

// Rate lambda whose Monte Carlo censoring proportion at 1e5 common draws
// (stream 0 of the design seed) is within +-0.005 of target_p, by bisection.
// target_p below 0.005 returns 0 (the no-censoring limit).
double calibrate_censoring_rate(const SimDesign& design, double target_p);

// Replication rep_index of the design, from its own substream (1 + rep):
// X row-major (one uniform + one normal per entry), then eps, then the
// censoring draws.
CensoredSample generate_dataset(const SimDesign& design, int rep_index);

enum class FitMode { adaptive_tau, fixed_tau0 };

struct RepRecord {
  int rep = 0;
  bool ok = false;
  std::string error;
  Eigen::VectorXd theta_hat;
  double h_hat = 0.0;
  double tau_hat = 0.0;
  int retained = 0;          // N = #{Z_i <= tau_hat}
  double weight_full = 0.0;  // largest-uncensored product-limit weight, full
  double weight_trunc = 0.0;  // same, recomputed on the retained subset
};

struct MonteCarloReport {
  Eigen::VectorXd bias;        // free coordinates
  Eigen::MatrixXd covariance;  // population covariance over successes
  double mse = 0.0;            // mean squared index error, free coordinates
  double mean_retained = 0.0;
  double weight_full = 0.0;
  double weight_trunc = 0.0;
  double lambda = 0.0;  // censoring rate actually used
  int successes = 0;
  int failures = 0;
  std::vector<RepRecord> records;
};

// Runs the estimator once per replication and aggregates bias, covariance
// and MSE over the free coordinates. Failed replications are recorded with
// their reason; more than 20% of them is a harness error.
MonteCarloReport monte_carlo_report(const SimDesign& design, FitMode mode);

struct WeightDiagnostics {
  double mean_retained = 0.0;
  double weight_full = 0.0;
  double weight_trunc = 0.0;
};

// Weight-allocation diagnostics of the adaptive fit across replications.
WeightDiagnostics weight_diagnostics(const SimDesign& design);

}  // namespace sicd
