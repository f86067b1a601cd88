#include "sicd/density.hpp"

#include <cmath>

#include "sicd/errors.hpp"
#include "sicd/simd/kernel_ops.hpp"

namespace sicd {

ActiveSet ActiveSet::build(const CensoredSample& sample,
                           const KMWeights& weights, const TauWindow& window) {
  const Eigen::Index n = sample.n();
  ActiveSet act;
  std::vector<int> keep;
  for (Eigen::Index i = 0; i < n; ++i)
    if (sample.delta[i] == 1 && weights.w[i] > 0.0 &&
        window.contains(sample.z[i]))
      keep.push_back(static_cast<int>(i));
  const std::size_t m = keep.size();
  act.a.resize(m);
  act.z.resize(m);
  act.x.resize(static_cast<Eigen::Index>(m), sample.d());
  act.index = std::move(keep);
  for (std::size_t j = 0; j < m; ++j) {
    const int i = act.index[j];
    act.a[j] = weights.w[i];
    act.z[j] = sample.z[i];
    act.x.row(static_cast<Eigen::Index>(j)) = sample.x.row(i);
    act.total_mass += act.a[j];
  }
  return act;
}

ProjectedDensity::ProjectedDensity(const ActiveSet& active,
                                   const Eigen::VectorXd& theta, double h)
    : active_(active), theta_(theta), h_(h) {
  if (!(h > 0.0) || !std::isfinite(h))
    throw InvalidInput("density: bandwidth must be positive and finite");
  if (theta.size() != active_.dim() && active_.size() > 0)
    throw InvalidInput("density: theta dimension does not match covariates");
  inv_h_ = 1.0 / h;
  const std::size_t m = active_.size();
  u_.resize(m);
  if (m > 0) {
    const Eigen::VectorXd proj = active_.x * theta_;
    for (std::size_t j = 0; j < m; ++j)
      u_[j] = proj[static_cast<Eigen::Index>(j)];
  }
}

DensityEstimate density_ratio_estimate(double numer, double denom,
                                       double inv_h) {
  DensityEstimate est;
  est.denominator = denom * inv_h;
  if (est.denominator <= density_floor) return est;  // trimmed, value 0
  const double ratio = inv_h * numer / denom;
  if (!(ratio >= density_floor)) return est;  // negative/NaN/tiny: trimmed
  est.value = ratio;
  est.trimmed = false;
  return est;
}

DensityEstimate ProjectedDensity::at(double z, double u,
                                     int exclude_member) const {
  const std::size_t m = active_.size();
  if (m == 0) return {};
  const auto& ops = simd::ops();
  std::vector<double> kx(m), kz(m);
  ops.kernel_transformed(u_.data(), m, u, inv_h_, 0, kx.data());
  ops.kernel_transformed(active_.z.data(), m, z, inv_h_, 0, kz.data());
  double denom = ops.dot(active_.a.data(), kx.data(), m);
  double numer = ops.dot3(active_.a.data(), kx.data(), kz.data(), m);
  if (exclude_member >= 0) {
    const auto j = static_cast<std::size_t>(exclude_member);
    denom -= active_.a[j] * kx[j];
    numer -= (active_.a[j] * kx[j]) * kz[j];
  }
  return density_ratio_estimate(numer, denom, inv_h_);
}

ProjectedDensity::ValueAndGradient ProjectedDensity::value_and_gradient(
    double z, const Eigen::RowVectorXd& x_row, int exclude_member) const {
  const Eigen::Index d = theta_.size();
  ValueAndGradient out;
  out.grad = Eigen::VectorXd::Zero(d);
  const std::size_t m = active_.size();
  if (m == 0) return out;

  const double u = x_row.dot(theta_);
  const auto& ops = simd::ops();
  std::vector<double> kx(m), kz(m), kxp(m), akxp(m);
  ops.kernel_transformed(u_.data(), m, u, inv_h_, 0, kx.data());
  ops.kernel_transformed(active_.z.data(), m, z, inv_h_, 0, kz.data());
  ops.kernel_transformed(u_.data(), m, u, inv_h_, 1, kxp.data());
  ops.mul(active_.a.data(), kxp.data(), m, akxp.data());

  double denom = ops.dot(active_.a.data(), kx.data(), m);
  double numer = ops.dot3(active_.a.data(), kx.data(), kz.data(), m);
  double t1 = ops.dot3(active_.a.data(), kxp.data(), kz.data(), m);
  double t3 = ops.dot(active_.a.data(), kxp.data(), m);
  Eigen::VectorXd t2(d), t4(d);
  for (Eigen::Index col = 0; col < d; ++col) {
    const double* xc = active_.x.col(col).data();
    t2[col] = ops.dot3(akxp.data(), kz.data(), xc, m);
    t4[col] = ops.dot(akxp.data(), xc, m);
  }

  if (exclude_member >= 0) {
    const auto j = static_cast<std::size_t>(exclude_member);
    const auto je = static_cast<Eigen::Index>(j);
    denom -= active_.a[j] * kx[j];
    numer -= (active_.a[j] * kx[j]) * kz[j];
    t1 -= (active_.a[j] * kxp[j]) * kz[j];
    t3 -= active_.a[j] * kxp[j];
    t2 -= (akxp[j] * kz[j]) * active_.x.row(je).transpose();
    t4 -= akxp[j] * active_.x.row(je).transpose();
  }

  out.est = density_ratio_estimate(numer, denom, inv_h_);
  if (out.est.trimmed) return out;

  // d/dtheta_m of K((u - u_j)/h) is K'((u - u_j)/h) (x_m - X_jm)/h; collect
  // numerator and denominator gradients and apply the quotient rule.
  const Eigen::VectorXd grad_numer =
      (x_row.transpose() * t1 - t2) * inv_h_;
  const Eigen::VectorXd grad_denom =
      (x_row.transpose() * t3 - t4) * inv_h_;
  out.grad = inv_h_ * (grad_numer * denom - numer * grad_denom) /
             (denom * denom);
  return out;
}

double ProjectedDensity::index_density(double u) const {
  const std::size_t m = active_.size();
  if (m == 0 || active_.total_mass <= 0.0)
    throw NumericalError(
        "index density: degenerate window, no uncensored mass inside");
  const auto& ops = simd::ops();
  std::vector<double> kx(m);
  ops.kernel_transformed(u_.data(), m, u, inv_h_, 0, kx.data());
  const double s = ops.dot(active_.a.data(), kx.data(), m);
  return inv_h_ * s / active_.total_mass;
}

DensityEstimate conditional_density(const CensoredSample& sample,
                                    const KMWeights& weights,
                                    const Eigen::VectorXd& theta, double h,
                                    const TauWindow& window, double z,
                                    double u) {
  const ActiveSet act = ActiveSet::build(sample, weights, window);
  if (act.size() == 0) {
    if (!(h > 0.0)) throw InvalidInput("density: bandwidth must be positive");
    return {};
  }
  return ProjectedDensity(act, theta, h).at(z, u);
}

Eigen::VectorXd conditional_density_gradient(const CensoredSample& sample,
                                             const KMWeights& weights,
                                             const Eigen::VectorXd& theta,
                                             double h, const TauWindow& window,
                                             double z,
                                             const Eigen::RowVectorXd& x_row) {
  const ActiveSet act = ActiveSet::build(sample, weights, window);
  if (act.size() == 0) {
    if (!(h > 0.0)) throw InvalidInput("density: bandwidth must be positive");
    return Eigen::VectorXd::Zero(theta.size());
  }
  return ProjectedDensity(act, theta, h).value_and_gradient(z, x_row).grad;
}

double index_density(const CensoredSample& sample, const KMWeights& weights,
                     const Eigen::VectorXd& theta, double h,
                     const TauWindow& window, double u) {
  const ActiveSet act = ActiveSet::build(sample, weights, window);
  if (act.size() == 0)
    throw NumericalError(
        "index density: degenerate window, no uncensored mass inside");
  return ProjectedDensity(act, theta, h).index_density(u);
}

}  // namespace sicd
