#include "sicd/trimming.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "sicd/errors.hpp"

namespace sicd {

namespace {

// Nearest-rank percentile: smallest element with at least p of the sample at
// or below it.
double nearest_rank(std::vector<double> v, double p) {
  if (v.empty()) throw InvalidInput("percentile of an empty set");
  std::sort(v.begin(), v.end());
  const auto n = static_cast<double>(v.size());
  auto k = static_cast<std::size_t>(std::ceil(p * n));
  if (k == 0) k = 1;
  return v[std::min(k, v.size()) - 1];
}

}  // namespace

Box::Box(Eigen::VectorXd lo_, Eigen::VectorXd hi_)
    : lo(std::move(lo_)), hi(std::move(hi_)) {
  if (lo.size() != hi.size() || lo.size() == 0)
    throw InvalidInput("trimming box: bounds must share a positive dimension");
  for (Eigen::Index j = 0; j < lo.size(); ++j)
    if (!(lo[j] < hi[j]))
      throw InvalidInput("trimming box: degenerate interval at coordinate " +
                         std::to_string(j));
}

bool Box::contains(const Eigen::RowVectorXd& x_row) const {
  if (x_row.size() != lo.size())
    throw InvalidInput("trimming box: dimension mismatch");
  for (Eigen::Index j = 0; j < lo.size(); ++j)
    if (x_row[j] < lo[j] || x_row[j] > hi[j]) return false;
  return true;
}

Box default_box(const Eigen::MatrixXd& x) {
  const Eigen::Index d = x.cols();
  Eigen::VectorXd lo(d), hi(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    std::vector<double> col(x.col(j).data(), x.col(j).data() + x.rows());
    lo[j] = nearest_rank(col, 0.05);
    hi[j] = nearest_rank(col, 0.95);
    if (!(lo[j] < hi[j])) {
      // Constant or near-constant coordinate: fall back to its full range,
      // widened a hair so the box stays non-degenerate.
      lo[j] = x.col(j).minCoeff();
      hi[j] = x.col(j).maxCoeff();
      if (!(lo[j] < hi[j])) {
        lo[j] -= 0.5;
        hi[j] += 0.5;
      }
    }
  }
  return {lo, hi};
}

int trimming_fixed(const Eigen::RowVectorXd& x_row, const Box& box) {
  return box.contains(x_row) ? 1 : 0;
}

AdaptiveTrimming::AdaptiveTrimming(const CensoredSample& sample,
                                   const KMWeights& weights,
                                   const Eigen::VectorXd& theta_pilot,
                                   double h0, const TauWindow& window, double c)
    : c_(c) {
  if (!(c >= 0.0) || !std::isfinite(c))
    throw InvalidInput("adaptive trimming: level c must be finite and >= 0");
  const ActiveSet act = ActiveSet::build(sample, weights, window);
  if (act.size() == 0)
    throw NumericalError(
        "adaptive trimming: degenerate window, no uncensored mass inside");
  pilot_ = std::make_shared<const ProjectedDensity>(act, theta_pilot, h0);
}

int AdaptiveTrimming::operator()(const Eigen::RowVectorXd& x_row) const {
  const double u = x_row.dot(pilot_->theta());
  return pilot_->index_density(u) > c_ ? 1 : 0;
}

double AdaptiveTrimming::pilot_index_density(double u) const {
  return pilot_->index_density(u);
}

int trimming_adaptive(const Eigen::RowVectorXd& x_row,
                      const Eigen::VectorXd& theta_pilot, double h0,
                      const TauWindow& window, double c,
                      const CensoredSample& sample, const KMWeights& weights) {
  return AdaptiveTrimming(sample, weights, theta_pilot, h0, window, c)(x_row);
}

double default_trim_threshold(const CensoredSample& sample,
                              const KMWeights& weights,
                              const Eigen::VectorXd& theta_pilot, double h0,
                              const TauWindow& window) {
  const ActiveSet act = ActiveSet::build(sample, weights, window);
  if (act.size() == 0)
    throw NumericalError(
        "trimming level: degenerate window, no uncensored mass inside");
  const ProjectedDensity pilot(act, theta_pilot, h0);
  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(sample.n()));
  for (Eigen::Index i = 0; i < sample.n(); ++i)
    values.push_back(
        pilot.index_density(sample.x.row(i).dot(theta_pilot)));
  // The smoothing kernel has negative side lobes, so outlying points can
  // carry a negative pilot density; the level is floored at zero, which
  // still trims exactly those points (the indicator keeps density > c).
  return std::max(0.0, nearest_rank(std::move(values), 0.05));
}

}  // namespace sicd
