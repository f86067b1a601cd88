#pragma once

#include <Eigen/Dense>
#include <vector>

#include "sicd/censored_sample.hpp"
#include "sicd/density.hpp"
#include "sicd/survival.hpp"
#include "sicd/trimming.hpp"

namespace sicd {

struct LoglikResult {
  double value = 0.0;
  int contributing = 0;  // terms whose own log f_hat entered the sum
  int excluded = 0;      // active members dropped by the trimming flag
  int clamped = 0;       // terms floored to log(density_floor)
};

// Weighted pseudo-log-likelihood evaluator for one (window, h): caches the
// response-kernel matrix (theta-independent) and the per-member trimming
// flags, then evaluates sum_i a_i J(X_i) log f_hat(Z_i, theta'X_i) for any
// theta. Evaluation points are the active members; leave_one_out removes the
// self term from both estimator sums.
//
// Terms whose density estimate falls below the floor are clamped to
// log(density_floor), never dropped: the exclusion set must not depend on
// theta (only the fixed trimming flag does), and with all-negative log
// terms a dropped observation would otherwise raise the objective,
// rewarding indices that spread the projections until points lose their
// neighbors.
class LikelihoodEvaluator {
 public:
  LikelihoodEvaluator(const CensoredSample& sample, const KMWeights& weights,
                      const TauWindow& window, double h, const TrimmingFn& J,
                      bool leave_one_out = true);

  LoglikResult operator()(const Eigen::VectorXd& theta) const;

  const ActiveSet& active() const { return active_; }
  double bandwidth() const { return h_; }
  bool leave_one_out() const { return loo_; }
  int eligible_terms() const { return n_eval_; }

 private:
  ActiveSet active_;
  double h_;
  double inv_h_;
  bool loo_;
  std::vector<char> eval_flag_;  // J(X_j) per active member
  int n_eval_;
  Eigen::MatrixXd kz_;         // cached K((z_i - z_j)/h), m x m
  mutable Eigen::MatrixXd kx_;  // scratch, rebuilt per theta
};

// One-shot form mirroring the evaluator (builds it, evaluates once).
// Throws a degenerate-objective error when eligible terms exist but every
// one is excluded; an empty eligible set (J identically zero, or an empty
// window) returns value 0 with the full exclusion tally instead.
LoglikResult pseudo_loglik(const CensoredSample& sample,
                           const KMWeights& weights,
                           const Eigen::VectorXd& theta, double h,
                           const TauWindow& window, const TrimmingFn& J,
                           bool leave_one_out = true);

// Generic form over any conditional-density evaluator f(z, u) — used with
// substituted densities in tests and reference pipelines. Same value, tally
// and error semantics as above.
using DensityFn = std::function<DensityEstimate(double z, double u)>;

LoglikResult pseudo_loglik(const CensoredSample& sample,
                           const KMWeights& weights,
                           const Eigen::VectorXd& theta,
                           const DensityFn& density, const TauWindow& window,
                           const TrimmingFn& J);

}  // namespace sicd
