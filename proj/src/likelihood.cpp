#include "sicd/likelihood.hpp"

#include <cmath>

#include "sicd/errors.hpp"
#include "sicd/kernel.hpp"
#include "sicd/simd/kernel_ops.hpp"

namespace sicd {

LikelihoodEvaluator::LikelihoodEvaluator(const CensoredSample& sample,
                                         const KMWeights& weights,
                                         const TauWindow& window, double h,
                                         const TrimmingFn& J,
                                         bool leave_one_out)
    : active_(ActiveSet::build(sample, weights, window)),
      h_(h),
      loo_(leave_one_out),
      n_eval_(0) {
  if (!(h > 0.0) || !std::isfinite(h))
    throw InvalidInput("likelihood: bandwidth must be positive and finite");
  if (!J) throw InvalidInput("likelihood: trimming function is empty");
  inv_h_ = 1.0 / h;
  const auto m = static_cast<Eigen::Index>(active_.size());
  eval_flag_.resize(active_.size());
  for (Eigen::Index j = 0; j < m; ++j) {
    const char flag = J(active_.x.row(j)) != 0 ? 1 : 0;
    eval_flag_[static_cast<std::size_t>(j)] = flag;
    n_eval_ += flag;
  }
  kz_.resize(m, m);
  kx_.resize(m, m);
  const auto& o = simd::ops();
  for (Eigen::Index j = 0; j < m; ++j)
    o.kernel_transformed(active_.z.data(), active_.size(),
                         active_.z[static_cast<std::size_t>(j)], inv_h_, 0,
                         kz_.col(j).data());
}

LoglikResult LikelihoodEvaluator::operator()(
    const Eigen::VectorXd& theta) const {
  LoglikResult out;
  const auto m = static_cast<Eigen::Index>(active_.size());
  if (m == 0) return out;
  if (theta.size() != active_.dim())
    throw InvalidInput("likelihood: theta dimension does not match covariates");

  const Eigen::VectorXd u = active_.x * theta;
  const auto& o = simd::ops();
  for (Eigen::Index j = 0; j < m; ++j)
    o.kernel_transformed(u.data(), active_.size(), u[j], inv_h_, 0,
                         kx_.col(j).data());

  const Eigen::Map<const Eigen::VectorXd> a(active_.a.data(), m);
  // D_i = sum_j a_j K((u_i - u_j)/h); N_i adds the response-kernel factor.
  const Eigen::VectorXd dsum = kx_ * a;
  const Eigen::VectorXd nsum = (kx_.array() * kz_.array()).matrix() * a;

  for (Eigen::Index i = 0; i < m; ++i) {
    if (!eval_flag_[static_cast<std::size_t>(i)]) {
      ++out.excluded;
      continue;
    }
    double di = dsum[i];
    double ni = nsum[i];
    if (loo_) {
      // Both self factors are exact kernel-at-zero values on the diagonals.
      const double ak = a[i] * kernel_at_zero;
      di -= ak;
      ni -= ak * kernel_at_zero;
    }
    const DensityEstimate est = density_ratio_estimate(ni, di, inv_h_);
    if (est.trimmed) {
      out.value += a[i] * log_density_floor;
      ++out.clamped;
      continue;
    }
    out.value += a[i] * std::log(est.value);
    ++out.contributing;
  }
  return out;
}

LoglikResult pseudo_loglik(const CensoredSample& sample,
                           const KMWeights& weights,
                           const Eigen::VectorXd& theta, double h,
                           const TauWindow& window, const TrimmingFn& J,
                           bool leave_one_out) {
  const LikelihoodEvaluator eval(sample, weights, window, h, J, leave_one_out);
  const LoglikResult out = eval(theta);
  if (eval.eligible_terms() > 0 && out.contributing == 0)
    throw NumericalError(
        "degenerate objective: every eligible term fell below the density floor");
  return out;
}

LoglikResult pseudo_loglik(const CensoredSample& sample,
                           const KMWeights& weights,
                           const Eigen::VectorXd& theta,
                           const DensityFn& density, const TauWindow& window,
                           const TrimmingFn& J) {
  if (!density) throw InvalidInput("likelihood: density function is empty");
  if (!J) throw InvalidInput("likelihood: trimming function is empty");
  if (theta.size() != sample.d())
    throw InvalidInput("likelihood: theta dimension does not match covariates");
  const Eigen::VectorXd u = sample.x * theta;

  LoglikResult out;
  int eligible = 0;
  for (Eigen::Index i = 0; i < sample.n(); ++i) {
    const double a = weights.w[i];
    if (sample.delta[i] != 1 || !(a > 0.0) || !window.contains(sample.z[i]))
      continue;
    if (J(sample.x.row(i)) == 0) {
      ++out.excluded;
      continue;
    }
    ++eligible;
    const DensityEstimate est = density(sample.z[i], u[i]);
    if (est.trimmed || !(est.value >= density_floor)) {
      out.value += a * log_density_floor;
      ++out.clamped;
      continue;
    }
    out.value += a * std::log(est.value);
    ++out.contributing;
  }
  if (eligible > 0 && out.contributing == 0)
    throw NumericalError(
        "degenerate objective: every eligible term fell below the density floor");
  return out;
}

}  // namespace sicd
