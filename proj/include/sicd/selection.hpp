#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "sicd/censored_sample.hpp"
#include "sicd/survival.hpp"
#include "sicd/trimming.hpp"

namespace sicd {

// Candidate grids for the two data-driven tuning choices.
struct SelectionGrids {
  std::vector<double> h_grid;    // increasing positive bandwidths
  std::vector<double> tau_grid;  // increasing truncation points
};

// `count` equally spaced points from lo to hi inclusive.
std::vector<double> regular_grid(double lo, double hi, int count);

// 10 log-spaced bandwidths in [0.5, 2] * sd(theta'X) * n^(-1/7).
std::vector<double> default_h_grid(const CensoredSample& sample,
                                   const Eigen::VectorXd& theta);

// Uncensored follow-up order statistics at the 50%..100% deciles
// (nearest rank), capped at tau0, deduplicated.
std::vector<double> default_tau_grid(const CensoredSample& sample,
                                     double tau0);

struct CVBandwidth {
  double h = 0.0;
  int chosen_index = -1;
  Eigen::VectorXd criterion;  // per-candidate; NaN where degenerate
  std::vector<int> excluded;  // per-candidate excluded-term counts
};

// Weighted least-squares cross-validation over h: minimizes
//   sum_i W_in 1{Z_i in A_tau} { integral of f_hat(z, u_i)^2 over A_tau
//                                - 2 f_loo(Z_i, u_i) }
// with the z-integral on a fixed trapezoid grid. Ties prefer the larger h.
CVBandwidth cv_bandwidth(const CensoredSample& sample, const KMWeights& weights,
                         const Eigen::VectorXd& theta, const TauWindow& window,
                         const std::vector<double>& h_grid,
                         int quadrature_points = 128);

struct AsymptoticComponents {
  Eigen::MatrixXd V_hat;      // d-1 x d-1, free coordinates
  Eigen::VectorXd W_hat;      // d-1
  Eigen::MatrixXd Delta_hat;  // d-1 x d-1
  double E2 = 0.0;
  bool singular = false;  // V_hat rank-deficient; pseudo-inverse was used
  int contributing = 0;   // members entering V_hat
};

// Plug-in components of the asymptotic expansion at a fitted theta:
// V_hat from weighted score outer products, W_hat = n^{-1/2} sum of
// influence rows, Delta_hat their empirical covariance, and the selection
// criterion E2 = n^{-1} W' V^+ V^+ W.
AsymptoticComponents asymptotic_components(
    const CensoredSample& sample, const KMWeights& weights,
    const Eigen::VectorXd& theta_hat, double h, const TauWindow& window,
    double tau0, const TrimmingFn& trimming);

// Moore-Penrose inverse of a symmetric matrix by eigendecomposition;
// *singular set when any eigenvalue falls at or below the rank tolerance.
Eigen::MatrixXd pseudo_inverse_sym(const Eigen::MatrixXd& m,
                                   bool* singular = nullptr);

double e2_criterion(const Eigen::MatrixXd& v_hat, const Eigen::VectorXd& w_hat,
                    Eigen::Index n, bool* singular = nullptr);

struct TruncationSelection {
  double tau = 0.0;
  int chosen_index = -1;
  struct Entry {
    double tau = 0.0;
    double e2 = 0.0;
    bool ok = false;
    std::string message;  // failure reason when !ok
  };
  std::vector<Entry> table;
};

// Evaluates e2_of_tau over the grid (failures recorded per candidate, not
// fatal unless universal) and picks the minimizer, preferring the larger
// tau on ties.
TruncationSelection select_truncation(
    const std::vector<double>& tau_grid,
    const std::function<double(double)>& e2_of_tau);

}  // namespace sicd
