#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>

#include "sicd/censored_sample.hpp"
#include "sicd/density.hpp"

namespace sicd {

// Closed per-coordinate box for the preliminary covariate trimming J_B.
struct Box {
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;

  Box() = default;
  Box(Eigen::VectorXd lo_, Eigen::VectorXd hi_);
  bool contains(const Eigen::RowVectorXd& x_row) const;
};

// Coordinate-wise [5%, 95%] sample quantiles (nearest rank) of X.
Box default_box(const Eigen::MatrixXd& x);

// 1 iff every coordinate lies inside the closed box.
int trimming_fixed(const Eigen::RowVectorXd& x_row, const Box& box);

// Density-based trimming: keeps x when the pilot estimate of the index
// density at theta_pilot'x exceeds c. Holds its own copy of the pilot so
// later fitting stages evaluate the same frozen indicator.
class AdaptiveTrimming {
 public:
  AdaptiveTrimming(const CensoredSample& sample, const KMWeights& weights,
                   const Eigen::VectorXd& theta_pilot, double h0,
                   const TauWindow& window, double c);

  int operator()(const Eigen::RowVectorXd& x_row) const;
  double threshold() const { return c_; }
  double pilot_index_density(double u) const;

 private:
  std::shared_ptr<const ProjectedDensity> pilot_;
  double c_;
};

int trimming_adaptive(const Eigen::RowVectorXd& x_row,
                      const Eigen::VectorXd& theta_pilot, double h0,
                      const TauWindow& window, double c,
                      const CensoredSample& sample, const KMWeights& weights);

// 5th percentile (nearest rank) of the pilot index-density values at the
// sample's covariate rows: the default trimming level c.
double default_trim_threshold(const CensoredSample& sample,
                              const KMWeights& weights,
                              const Eigen::VectorXd& theta_pilot, double h0,
                              const TauWindow& window);

using TrimmingFn = std::function<int(const Eigen::RowVectorXd&)>;

}  // namespace sicd
