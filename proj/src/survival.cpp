#include "sicd/survival.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "sicd/errors.hpp"

namespace sicd {

double KMWeights::total_event_mass() const { return w.sum(); }

KMWeights km_jump_weights(const CensoredSample& sample) {
  const Eigen::Index n = sample.n();
  Eigen::VectorXd w = Eigen::VectorXd::Zero(n);

  if ((sample.delta.array() == 1).all()) {
    w.setConstant(1.0 / static_cast<double>(n));
    return {w};
  }

  const std::vector<int> order = sample.sort_order();
  double surv = 1.0;
  for (Eigen::Index pos = 0; pos < n; ++pos) {
    const int i = order[static_cast<std::size_t>(pos)];
    const double at_risk = static_cast<double>(n - pos);
    if (sample.delta[i] == 1) {
      w[i] = surv / at_risk;
      surv *= 1.0 - 1.0 / at_risk;
    }
  }
  return {w};
}

namespace {

// Shared product-limit walk over the sorted sample. `counts` says whether a
// sorted position is an event for the distribution being estimated; tied
// times are merged into one jump. Returns a right-continuous CDF.
StepFunction product_limit_cdf(const CensoredSample& sample,
                               const std::function<bool(int)>& counts) {
  const Eigen::Index n = sample.n();
  const std::vector<int> order = sample.sort_order();

  std::vector<double> times;
  std::vector<double> cum;
  double surv = 1.0;
  Eigen::Index pos = 0;
  while (pos < n) {
    const double t = sample.z[order[static_cast<std::size_t>(pos)]];
    const double before = surv;
    while (pos < n && sample.z[order[static_cast<std::size_t>(pos)]] == t) {
      const int i = order[static_cast<std::size_t>(pos)];
      const double at_risk = static_cast<double>(n - pos);
      if (counts(i)) surv *= 1.0 - 1.0 / at_risk;
      ++pos;
    }
    if (surv < before) {
      times.push_back(t);
      cum.push_back(1.0 - surv);
    }
  }
  return StepFunction::from_cumulative(std::move(times), std::move(cum));
}

}  // namespace

StepFunction censoring_survival(const CensoredSample& sample) {
  return product_limit_cdf(sample,
                           [&](int i) { return sample.delta[i] == 0; });
}

StepFunction empirical_cdf_H(const CensoredSample& sample) {
  const Eigen::Index n = sample.n();
  const std::vector<int> order = sample.sort_order();
  std::vector<double> times;
  std::vector<double> cum;
  Eigen::Index pos = 0;
  while (pos < n) {
    const double t = sample.z[order[static_cast<std::size_t>(pos)]];
    while (pos < n && sample.z[order[static_cast<std::size_t>(pos)]] == t)
      ++pos;
    times.push_back(t);
    cum.push_back(static_cast<double>(pos) / static_cast<double>(n));
  }
  return StepFunction::from_cumulative(std::move(times), std::move(cum));
}

StepFunction km_distribution(const CensoredSample& sample,
                             const KMWeights& weights) {
  const Eigen::Index n = sample.n();
  const std::vector<int> order = sample.sort_order();
  std::vector<double> times;
  std::vector<double> cum;
  double acc = 0.0;
  Eigen::Index pos = 0;
  while (pos < n) {
    const double t = sample.z[order[static_cast<std::size_t>(pos)]];
    const double before = acc;
    while (pos < n && sample.z[order[static_cast<std::size_t>(pos)]] == t) {
      const int i = order[static_cast<std::size_t>(pos)];
      if (sample.delta[i] == 1) acc += weights.w[i];
      ++pos;
    }
    if (acc > before) {
      times.push_back(t);
      cum.push_back(acc);
    }
  }
  return StepFunction::from_cumulative(std::move(times), std::move(cum));
}

double stute_integral(
    const CensoredSample& sample, const KMWeights& weights,
    const std::function<double(const Eigen::RowVectorXd&, double)>&
        integrand) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < sample.n(); ++i) {
    if (sample.delta[i] != 1 || weights.w[i] == 0.0) continue;
    const double v = integrand(sample.x.row(i), sample.z[i]);
    if (!std::isfinite(v))
      throw NumericalError("weighted integral: non-finite integrand at observation " +
                           std::to_string(i));
    acc += weights.w[i] * v;
  }
  return acc;
}

Eigen::VectorXd stute_integral_vec(
    const CensoredSample& sample, const KMWeights& weights,
    const std::function<Eigen::VectorXd(const Eigen::RowVectorXd&, double)>&
        integrand) {
  Eigen::VectorXd acc;
  for (Eigen::Index i = 0; i < sample.n(); ++i) {
    if (sample.delta[i] != 1 || weights.w[i] == 0.0) continue;
    const Eigen::VectorXd v = integrand(sample.x.row(i), sample.z[i]);
    if (!v.allFinite())
      throw NumericalError("weighted integral: non-finite integrand at observation " +
                           std::to_string(i));
    if (acc.size() == 0) acc = Eigen::VectorXd::Zero(v.size());
    acc += weights.w[i] * v;
  }
  if (acc.size() == 0)
    throw NumericalError("weighted integral: no uncensored observation carries mass");
  return acc;
}

double default_tau0(const CensoredSample& sample) {
  const double zmax = sample.z.maxCoeff();
  double best = -std::numeric_limits<double>::infinity();
  bool found = false;
  for (Eigen::Index i = 0; i < sample.n(); ++i) {
    if (sample.delta[i] == 1 && sample.z[i] < zmax && sample.z[i] > best) {
      best = sample.z[i];
      found = true;
    }
  }
  if (!found)
    throw NumericalError(
        "truncation bound: no uncensored follow-up time lies strictly below the "
        "sample maximum");
  return best;
}

double largest_uncensored_weight(const CensoredSample& sample,
                                 const KMWeights& weights) {
  double best_z = -std::numeric_limits<double>::infinity();
  double best_w = 0.0;
  for (Eigen::Index i = 0; i < sample.n(); ++i) {
    if (sample.delta[i] != 1) continue;
    if (sample.z[i] > best_z) {
      best_z = sample.z[i];
      best_w = weights.w[i];
    } else if (sample.z[i] == best_z) {
      best_w = std::max(best_w, weights.w[i]);
    }
  }
  return best_w;
}

TruncationWeights truncation_weights(const CensoredSample& sample,
                                     double tau) {
  TruncationWeights out;
  out.full = largest_uncensored_weight(sample, km_jump_weights(sample));
  std::vector<int> keep;
  for (Eigen::Index i = 0; i < sample.n(); ++i)
    if (sample.z[i] <= tau) keep.push_back(static_cast<int>(i));
  out.retained = static_cast<Eigen::Index>(keep.size());
  if (keep.empty()) return out;
  const auto kn = static_cast<Eigen::Index>(keep.size());
  Eigen::VectorXd zs(kn);
  Eigen::VectorXi ds(kn);
  Eigen::MatrixXd xs(kn, sample.d());
  for (Eigen::Index k = 0; k < kn; ++k) {
    zs[k] = sample.z[keep[static_cast<std::size_t>(k)]];
    ds[k] = sample.delta[keep[static_cast<std::size_t>(k)]];
    xs.row(k) = sample.x.row(keep[static_cast<std::size_t>(k)]);
  }
  if ((ds.array() == 1).any()) {
    const CensoredSample sub{std::move(zs), std::move(ds), std::move(xs)};
    out.truncated = largest_uncensored_weight(sub, km_jump_weights(sub));
  }
  return out;
}

Eigen::MatrixXd influence_psi(
    const CensoredSample& sample, const KMWeights& weights,
    const StepFunction& Ghat, const StepFunction& Hhat,
    const std::function<Eigen::VectorXd(const Eigen::RowVectorXd&, double)>& f1,
    const TauWindow& window, double tau0) {
  const Eigen::Index n = sample.n();
  const std::vector<int> order = sample.sort_order();

  // Evaluate f1 once per eligible uncensored observation and find p.
  Eigen::Index p = -1;
  std::vector<Eigen::VectorXd> rows(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    const bool eligible = sample.delta[i] == 1 && sample.z[i] <= tau0 &&
                          window.contains(sample.z[i]);
    if (!eligible) continue;
    Eigen::VectorXd v = f1(sample.x.row(i), sample.z[i]);
    if (!v.allFinite())
      throw NumericalError("influence rows: non-finite integrand at observation " +
                           std::to_string(i));
    if (p < 0)
      p = v.size();
    else if (v.size() != p)
      throw InvalidInput("influence rows: integrand dimension changed between calls");
    rows[static_cast<std::size_t>(i)] = std::move(v);
  }
  if (p < 0)
    throw NumericalError(
        "influence rows: no uncensored observation is eligible inside the window");

  // Suffix sums of delta_j W_jn f1_j over sorted positions, so that
  // gamma(y) = suffix at the first sorted position with Z >= y.
  Eigen::MatrixXd suffix =
      Eigen::MatrixXd::Zero(n + 1, p);  // suffix.row(n) == 0
  std::vector<double> z_sorted(static_cast<std::size_t>(n));
  for (Eigen::Index pos = n - 1; pos >= 0; --pos) {
    const int i = order[static_cast<std::size_t>(pos)];
    z_sorted[static_cast<std::size_t>(pos)] = sample.z[i];
    suffix.row(pos) = suffix.row(pos + 1);
    const auto& r = rows[static_cast<std::size_t>(i)];
    if (r.size() > 0 && weights.w[i] > 0.0)
      suffix.row(pos) += weights.w[i] * r.transpose();
  }
  const auto gamma_at = [&](double y) -> Eigen::RowVectorXd {
    const auto it = std::lower_bound(z_sorted.begin(), z_sorted.end(), y);
    return suffix.row(it - z_sorted.begin());
  };

  // Compensator increments at the censoring jump times of Ghat, with prefix
  // sums so the per-observation correction is a single lookup.
  const auto& ct = Ghat.jump_times();
  const std::size_t m = ct.size();
  Eigen::MatrixXd comp_prefix = Eigen::MatrixXd::Zero(m + 1, p);
  for (std::size_t k = 0; k < m; ++k) {
    const double t = ct[k];
    const double g_left = 1.0 - Ghat.left_limit(t);
    const double h_left = 1.0 - Hhat.left_limit(t);
    comp_prefix.row(k + 1) =
        comp_prefix.row(k) +
        gamma_at(t) * (Ghat.jump_size(k) / (g_left * h_left));
  }

  Eigen::MatrixXd psi = Eigen::MatrixXd::Zero(n, p);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double zi = sample.z[i];
    const auto& r = rows[static_cast<std::size_t>(i)];
    if (r.size() > 0) {
      const double g_left = 1.0 - Ghat.left_limit(zi);
      if (g_left <= 0.0)
        throw NumericalError(
            "influence rows: censoring survival vanishes at observation " +
            std::to_string(i));
      psi.row(i) += r.transpose() / g_left;
    }
    if (sample.delta[i] == 0) {
      const double h_left = 1.0 - Hhat.left_limit(zi);
      psi.row(i) += gamma_at(zi) / h_left;
    }
    const auto kt = std::upper_bound(ct.begin(), ct.end(), zi);
    psi.row(i) -= comp_prefix.row(kt - ct.begin());
  }
  return psi;
}

Eigen::MatrixXd influence_psi(
    const CensoredSample& sample,
    const std::function<Eigen::VectorXd(const Eigen::RowVectorXd&, double)>& f1,
    const TauWindow& window, double tau0) {
  return influence_psi(sample, km_jump_weights(sample),
                       censoring_survival(sample), empirical_cdf_H(sample), f1,
                       window, tau0);
}

}  // namespace sicd
