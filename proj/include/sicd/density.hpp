#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "sicd/censored_sample.hpp"
#include "sicd/survival.hpp"

namespace sicd {

// Floor below which a kernel density ratio is reported as trimmed instead of
// fed to a logarithm.
inline constexpr double density_floor = 1e-10;

// log(density_floor): the objective value assigned to a floored term. The
// penalty must stay finite (the fourth-order kernel makes small negative
// estimates legitimate) yet harsh, so that an index which isolates
// observations loses more than it gains by silencing their terms.
inline const double log_density_floor = std::log(density_floor);

// Observations that actually carry mass in the window: a_i = delta_i W_in
// 1{Z_i in A_tau} > 0, compacted into contiguous arrays so the batched
// kernel primitives can stream over them.
struct ActiveSet {
  std::vector<double> a;   // weights, size m
  std::vector<double> z;   // follow-up times, size m
  Eigen::MatrixXd x;       // m x d covariate rows (column-major)
  std::vector<int> index;  // original observation index per member
  double total_mass = 0.0;

  std::size_t size() const { return a.size(); }
  Eigen::Index dim() const { return x.cols(); }

  static ActiveSet build(const CensoredSample& sample, const KMWeights& weights,
                         const TauWindow& window);
};

struct DensityEstimate {
  double value = 0.0;       // nonnegative; 0 when trimmed
  double denominator = 0.0; // index-density scale sum, (1/h) sum a_i K(.)
  bool trimmed = true;
};

// Shared rule turning raw kernel sums into an estimate: trims when the
// denominator is at or below the floor, or when the ratio is negative, NaN
// or below the floor (the log-likelihood must never see such values).
DensityEstimate density_ratio_estimate(double numer, double denom,
                                       double inv_h);

// Kernel conditional-density machinery for one (theta, h): projections
// u_j = theta'X_j precomputed, evaluations batched through the SIMD layer.
class ProjectedDensity {
 public:
  ProjectedDensity(const ActiveSet& active, const Eigen::VectorXd& theta,
                   double h);

  // f_hat(z, u): ratio of sum a_j K_h(u - u_j) K_h(z - Z_j) over
  // sum a_j K_h(u - u_j). exclude_member >= 0 removes that active member
  // from both sums (leave-one-out).
  DensityEstimate at(double z, double u, int exclude_member = -1) const;

  struct ValueAndGradient {
    DensityEstimate est;
    Eigen::VectorXd grad;  // d components, pinned coordinate included
  };

  // Gradient of theta -> f_hat_theta(z, theta'x_row) by the chain rule
  // through both kernel factors; zero vector when trimmed.
  ValueAndGradient value_and_gradient(double z, const Eigen::RowVectorXd& x_row,
                                      int exclude_member = -1) const;

  // Estimated density of theta'X given Y in the window:
  // sum a_j K_h(u - u_j) / sum a_j.
  double index_density(double u) const;

  const ActiveSet& active() const { return active_; }
  const std::vector<double>& projections() const { return u_; }
  double bandwidth() const { return h_; }
  const Eigen::VectorXd& theta() const { return theta_; }

 private:
  ActiveSet active_;
  Eigen::VectorXd theta_;
  double h_;
  double inv_h_;
  std::vector<double> u_;  // theta'X_j per active member
};

// Stateless spec-shaped entry points (each builds the active set afresh).
DensityEstimate conditional_density(const CensoredSample& sample,
                                    const KMWeights& weights,
                                    const Eigen::VectorXd& theta, double h,
                                    const TauWindow& window, double z,
                                    double u);

Eigen::VectorXd conditional_density_gradient(const CensoredSample& sample,
                                             const KMWeights& weights,
                                             const Eigen::VectorXd& theta,
                                             double h, const TauWindow& window,
                                             double z,
                                             const Eigen::RowVectorXd& x_row);

double index_density(const CensoredSample& sample, const KMWeights& weights,
                     const Eigen::VectorXd& theta, double h,
                     const TauWindow& window, double u);

}  // namespace sicd
