#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <numeric>
#include <vector>

#include "sicd/errors.hpp"

namespace sicd {

// Observed censored triples (Z_i, delta_i, X_i): follow-up time, event flag
// (1 = the response was observed, 0 = censored), covariate row. Column 0 of
// x carries the index coefficient pinned to 1.
struct CensoredSample {
  Eigen::VectorXd z;
  Eigen::VectorXi delta;
  Eigen::MatrixXd x;  // n x d

  CensoredSample() = default;
  CensoredSample(Eigen::VectorXd z_, Eigen::VectorXi delta_, Eigen::MatrixXd x_)
      : z(std::move(z_)), delta(std::move(delta_)), x(std::move(x_)) {
    validate();
  }

  Eigen::Index n() const { return z.size(); }
  Eigen::Index d() const { return x.cols(); }

  void validate() const {
    if (z.size() < 1) throw InvalidInput("sample: need at least one observation");
    if (delta.size() != z.size() || x.rows() != z.size())
      throw InvalidInput("sample: z, delta and x must have a common length");
    if (x.cols() < 1) throw InvalidInput("sample: need at least one covariate column");
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      if (!std::isfinite(z[i])) throw InvalidInput("sample: non-finite follow-up time");
      if (delta[i] != 0 && delta[i] != 1)
        throw InvalidInput("sample: event flags must be 0 or 1");
    }
    if (!x.allFinite()) throw InvalidInput("sample: non-finite covariate entry");
  }

  // Index permutation sorting by Z ascending; at tied Z the uncensored
  // observation comes first so it is still at risk for the censored tie.
  std::vector<int> sort_order() const {
    std::vector<int> idx(static_cast<std::size_t>(n()));
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
      if (z[a] != z[b]) return z[a] < z[b];
      return delta[a] > delta[b];
    });
    return idx;
  }
};

// Closed truncation window A_tau = [lo, hi] for the response.
struct TauWindow {
  double lo;
  double hi;
  bool contains(double t) const { return lo <= t && t <= hi; }
};

}  // namespace sicd
