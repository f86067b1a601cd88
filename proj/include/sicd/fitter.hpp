#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "sicd/censored_sample.hpp"
#include "sicd/selection.hpp"
#include "sicd/survival.hpp"
#include "sicd/trimming.hpp"

namespace sicd {

// Derivative-free search settings for the index maximizations.
struct OptimizerConfig {
  int max_iters = 400;
  double x_tolerance = 1e-7;
  double f_tolerance = 1e-10;
  int restarts = 3;  // jittered starts per maximization
};

// Configuration for the two-stage fit. Empty optionals are derived from the
// data: box = coordinate-wise [5%, 95%] quantiles, trim_level = 5th
// percentile of the pilot index density, h0 = sd(Z) * n^(-1/7), h_grid =
// log-spaced around the index scale, tau_grid = upper deciles of the
// uncensored follow-ups capped at the default safe truncation.
struct FitConfig {
  std::optional<Box> box;
  std::optional<double> trim_level;
  std::optional<double> h0;
  std::optional<std::vector<double>> h_grid;
  std::optional<std::vector<double>> tau_grid;
  double neighborhood_radius = 0.5;  // ball around theta_prelim for stage two
  OptimizerConfig optimizer;
  std::uint64_t seed = 1;
  bool leave_one_out = true;        // leave-one-out inside the objective
  bool exact_cv_per_theta = false;  // re-select h at every theta (small n)
  int quadrature_points = 128;      // cross-validation quadrature

  void validate() const;
};

// How the bandwidth/index alternation for the reported branch ended.
struct ConvergenceReport {
  int alternations = 0;
  bool fixed_point = false;       // relative change fell below 1e-4
  int optimizer_iterations = 0;   // final maximization, best restart
  int optimizer_evaluations = 0;  // final maximization, all restarts
  bool optimizer_converged = false;
};

struct IndexModelFit {
  Eigen::VectorXd theta_hat;     // first coordinate pinned to 1
  Eigen::VectorXd theta_prelim;  // full-box preliminary maximizer
  double h_hat = 0.0;
  double tau_hat = 0.0;
  TruncationSelection e2_table;  // per-truncation criterion diagnostics
  Eigen::MatrixXd V_hat;         // curvature, free coordinates
  Eigen::MatrixXd Delta_hat;     // influence covariance
  Eigen::MatrixXd Sigma_hat;     // sandwich V^+ Delta V^+
  bool sigma_singular = false;   // a pseudo-inverse dropped eigenvalues
  int contributing = 0;          // objective terms at the reported optimum
  int excluded = 0;              // active members trimmed away there
  ConvergenceReport convergence;

  // Resolved defaults, echoed for reporting.
  double h0 = 0.0;
  double tau0 = 0.0;
  double trim_level = 0.0;
};

// Preliminary estimator: maximizes the pseudo-log-likelihood with the fixed
// covariate-box trimming over the whole parameter space (first coordinate
// pinned to 1), pilot bandwidth, default safe truncation. Starts from a
// product-limit weighted least-squares slope plus jittered restarts.
Eigen::VectorXd preliminary_fit(const CensoredSample& sample,
                                const FitConfig& config);

// Full pipeline: preliminary fit, density-based trimming frozen at the
// preliminary index, per-truncation alternation of bandwidth selection and
// index maximization over the neighborhood ball, truncation choice by the
// estimated asymptotic mean squared error, sandwich covariance.
IndexModelFit fit(const CensoredSample& sample, const FitConfig& config);

// One branch of the pipeline at a caller-chosen truncation level (used for
// the non-adaptive comparator). Identical to the matching branch inside
// fit() to the bit.
IndexModelFit fixed_tau_fit(const CensoredSample& sample,
                            const FitConfig& config, double tau);

struct StandardErrors {
  Eigen::MatrixXd sigma_over_n;  // Sigma_hat / n
  Eigen::VectorXd se;            // sqrt(diag(Sigma_hat) / n), free coords
  bool singular = false;
};

// Sandwich standard errors from a fit's curvature and influence covariance.
StandardErrors standard_errors(const IndexModelFit& fit, Eigen::Index n);

}  // namespace sicd
