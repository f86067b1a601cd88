#include "sicd/selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sicd/density.hpp"
#include "sicd/errors.hpp"
#include "sicd/kernel.hpp"
#include "sicd/simd/kernel_ops.hpp"

namespace sicd {

namespace {

void validate_grid(const std::vector<double>& grid, const char* what,
                   bool positive) {
  if (grid.empty())
    throw InvalidInput(std::string("selection: empty ") + what + " grid");
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (!std::isfinite(grid[k]) || (positive && !(grid[k] > 0.0)))
      throw InvalidInput(std::string("selection: ") + what +
                         " grid entry " + std::to_string(k) + " is invalid");
    if (k > 0 && !(grid[k] > grid[k - 1]))
      throw InvalidInput(std::string("selection: ") + what +
                         " grid must be strictly increasing");
  }
}

}  // namespace

std::vector<double> regular_grid(double lo, double hi, int count) {
  if (!(count >= 1) || !std::isfinite(lo) || !std::isfinite(hi) || !(hi >= lo))
    throw InvalidInput("selection: malformed regular grid request");
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(count));
  if (count == 1) {
    out.push_back(lo);
    return out;
  }
  const double step = (hi - lo) / (count - 1);
  for (int k = 0; k < count; ++k) out.push_back(lo + k * step);
  return out;
}

std::vector<double> default_h_grid(const CensoredSample& sample,
                                   const Eigen::VectorXd& theta) {
  if (theta.size() != sample.d())
    throw InvalidInput("selection: theta dimension does not match covariates");
  const Eigen::VectorXd u = sample.x * theta;
  const double mean = u.mean();
  const double var = (u.array() - mean).square().sum() /
                     static_cast<double>(sample.n());
  if (!(var > 0.0))
    throw NumericalError("selection: index has zero variance");
  const double scale =
      std::sqrt(var) * std::pow(static_cast<double>(sample.n()), -1.0 / 7.0);
  const double lo = std::log(0.5 * scale);
  const double hi = std::log(2.0 * scale);
  std::vector<double> grid;
  grid.reserve(10);
  for (int k = 0; k < 10; ++k)
    grid.push_back(std::exp(lo + k * (hi - lo) / 9.0));
  return grid;
}

std::vector<double> default_tau_grid(const CensoredSample& sample,
                                     double tau0) {
  std::vector<double> uncensored;
  for (Eigen::Index i = 0; i < sample.n(); ++i)
    if (sample.delta[i] == 1) uncensored.push_back(sample.z[i]);
  if (uncensored.empty())
    throw NumericalError("selection: no uncensored observations");
  std::sort(uncensored.begin(), uncensored.end());
  const std::size_t m = uncensored.size();
  std::vector<double> grid;
  for (std::size_t dec = 5; dec <= 10; ++dec) {
    // Nearest-rank decile: ceil(dec * m / 10), in integer arithmetic.
    const std::size_t rank = std::max<std::size_t>(1, (dec * m + 9) / 10);
    const double v = std::min(uncensored[std::min(rank, m) - 1], tau0);
    grid.push_back(v);
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

CVBandwidth cv_bandwidth(const CensoredSample& sample, const KMWeights& weights,
                         const Eigen::VectorXd& theta, const TauWindow& window,
                         const std::vector<double>& h_grid,
                         int quadrature_points) {
  validate_grid(h_grid, "bandwidth", true);
  if (quadrature_points < 2)
    throw InvalidInput("selection: need at least 2 quadrature points");
  if (theta.size() != sample.d())
    throw InvalidInput("selection: theta dimension does not match covariates");

  const ActiveSet act = ActiveSet::build(sample, weights, window);
  const auto m = static_cast<Eigen::Index>(act.size());
  if (m == 0)
    throw NumericalError("selection: window contains no uncensored mass");

  const Eigen::VectorXd u = act.x * theta;
  const Eigen::Map<const Eigen::VectorXd> a(act.a.data(), m);
  const int G = quadrature_points;
  Eigen::VectorXd zgrid(G);
  const double dz = (window.hi - window.lo) / (G - 1);
  for (int g = 0; g < G; ++g) zgrid[g] = window.lo + g * dz;

  const auto& o = simd::ops();
  const auto k = static_cast<Eigen::Index>(h_grid.size());
  CVBandwidth out;
  out.criterion.resize(k);
  out.excluded.assign(h_grid.size(), 0);

  Eigen::MatrixXd kx(m, m), kz(m, m), kzg(G, m), numer;
  for (Eigen::Index hi_idx = 0; hi_idx < k; ++hi_idx) {
    const double h = h_grid[static_cast<std::size_t>(hi_idx)];
    const double inv_h = 1.0 / h;
    for (Eigen::Index j = 0; j < m; ++j) {
      o.kernel_transformed(u.data(), act.size(), u[j], inv_h, 0,
                           kx.col(j).data());
      o.kernel_transformed(act.z.data(), act.size(),
                           act.z[static_cast<std::size_t>(j)], inv_h, 0,
                           kz.col(j).data());
      o.kernel_transformed(zgrid.data(), static_cast<std::size_t>(G),
                           act.z[static_cast<std::size_t>(j)], inv_h, 0,
                           kzg.col(j).data());
    }
    const Eigen::VectorXd dsum = kx * a;
    const Eigen::VectorXd nsum = (kx.array() * kz.array()).matrix() * a;
    numer.noalias() = (kx * a.asDiagonal()) * kzg.transpose();  // m x G

    double crit = 0.0;
    int excl = 0;
    for (Eigen::Index i = 0; i < m; ++i) {
      if (dsum[i] * inv_h <= density_floor) {
        ++excl;
        continue;
      }
      const double ak = a[i] * kernel_at_zero;
      const double t2 =
          density_ratio_estimate(nsum[i] - ak * kernel_at_zero,
                                 dsum[i] - ak, inv_h)
              .value;
      double square_sum = 0.0;
      for (int g = 0; g < G; ++g) {
        const double val =
            density_ratio_estimate(numer(i, g), dsum[i], inv_h).value;
        square_sum += (g == 0 || g == G - 1) ? 0.5 * val * val : val * val;
      }
      crit += a[i] * (square_sum * dz - 2.0 * t2);
    }
    out.excluded[static_cast<std::size_t>(hi_idx)] = excl;
    out.criterion[hi_idx] =
        excl == m ? std::numeric_limits<double>::quiet_NaN() : crit;
  }

  for (Eigen::Index hi_idx = 0; hi_idx < k; ++hi_idx) {
    const double c = out.criterion[hi_idx];
    if (std::isnan(c)) continue;
    if (out.chosen_index < 0 || c <= out.criterion[out.chosen_index])
      out.chosen_index = static_cast<int>(hi_idx);
  }
  if (out.chosen_index < 0)
    throw NumericalError(
        "selection: cross-validation criterion degenerate for every "
        "bandwidth");
  out.h = h_grid[static_cast<std::size_t>(out.chosen_index)];
  return out;
}

Eigen::MatrixXd pseudo_inverse_sym(const Eigen::MatrixXd& m, bool* singular) {
  if (m.rows() != m.cols())
    throw InvalidInput("selection: pseudo-inverse expects a square matrix");
  if (singular) *singular = false;
  if (m.rows() == 0) return m;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  if (es.info() != Eigen::Success)
    throw NumericalError("selection: eigendecomposition failed");
  const Eigen::VectorXd& vals = es.eigenvalues();
  const double top = vals.cwiseAbs().maxCoeff();
  const double tol = top * static_cast<double>(m.rows()) *
                     std::numeric_limits<double>::epsilon();
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(vals.size());
  bool any_dropped = false;
  for (Eigen::Index i = 0; i < vals.size(); ++i) {
    if (vals[i] > tol)
      inv[i] = 1.0 / vals[i];
    else
      any_dropped = true;
  }
  if (singular) *singular = any_dropped || top == 0.0;
  return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
}

double e2_criterion(const Eigen::MatrixXd& v_hat, const Eigen::VectorXd& w_hat,
                    Eigen::Index n, bool* singular) {
  if (v_hat.rows() != w_hat.size())
    throw InvalidInput("selection: V and W dimensions disagree");
  if (n < 1) throw InvalidInput("selection: sample size must be positive");
  if (singular) *singular = false;
  if (w_hat.size() == 0) return 0.0;
  const Eigen::MatrixXd pinv = pseudo_inverse_sym(v_hat, singular);
  const Eigen::VectorXd y = pinv * w_hat;
  return y.squaredNorm() / static_cast<double>(n);
}

AsymptoticComponents asymptotic_components(
    const CensoredSample& sample, const KMWeights& weights,
    const Eigen::VectorXd& theta_hat, double h, const TauWindow& window,
    double tau0, const TrimmingFn& trimming) {
  if (!trimming) throw InvalidInput("selection: trimming function is empty");
  if (theta_hat.size() != sample.d())
    throw InvalidInput("selection: theta dimension does not match covariates");
  const Eigen::Index dp = sample.d() - 1;

  const ActiveSet act = ActiveSet::build(sample, weights, window);
  const ProjectedDensity dens(act, theta_hat, h);

  AsymptoticComponents out;
  out.V_hat = Eigen::MatrixXd::Zero(dp, dp);
  for (std::size_t j = 0; j < act.size(); ++j) {
    const auto je = static_cast<Eigen::Index>(j);
    if (trimming(act.x.row(je)) == 0) continue;
    const auto vg = dens.value_and_gradient(act.z[j], act.x.row(je));
    if (vg.est.trimmed) continue;
    const Eigen::VectorXd g = vg.grad.tail(dp) / vg.est.value;
    // Materialize the outer product before scaling so (r, c) and (c, r) see
    // the same rounding and V stays symmetric to the bit.
    const Eigen::MatrixXd outer = g * g.transpose();
    out.V_hat += act.a[j] * outer;
    ++out.contributing;
  }
  if (out.contributing < dp + 1)
    throw NumericalError(
        "selection: insufficient data, " + std::to_string(out.contributing) +
        " contributing observations for " + std::to_string(dp) +
        " free coordinates");

  const auto f1 = [&dens, &trimming, dp](const Eigen::RowVectorXd& x_row,
                                         double z) -> Eigen::VectorXd {
    if (trimming(x_row) == 0) return Eigen::VectorXd::Zero(dp);
    const auto vg = dens.value_and_gradient(z, x_row);
    if (vg.est.trimmed) return Eigen::VectorXd::Zero(dp);
    return vg.grad.tail(dp) / vg.est.value;
  };
  const Eigen::MatrixXd psi =
      influence_psi(sample, weights, censoring_survival(sample),
                    empirical_cdf_H(sample), f1, window, tau0);

  const auto n = static_cast<double>(sample.n());
  out.W_hat = psi.colwise().sum().transpose() / std::sqrt(n);
  const Eigen::RowVectorXd mean = psi.colwise().mean();
  const Eigen::MatrixXd centered = psi.rowwise() - mean;
  out.Delta_hat = centered.transpose() * centered / n;
  out.E2 = e2_criterion(out.V_hat, out.W_hat, sample.n(), &out.singular);
  return out;
}

TruncationSelection select_truncation(
    const std::vector<double>& tau_grid,
    const std::function<double(double)>& e2_of_tau) {
  validate_grid(tau_grid, "truncation", false);
  if (!e2_of_tau)
    throw InvalidInput("selection: truncation callback is empty");

  TruncationSelection out;
  out.table.reserve(tau_grid.size());
  for (const double tau : tau_grid) {
    TruncationSelection::Entry entry;
    entry.tau = tau;
    try {
      const double e2 = e2_of_tau(tau);
      if (!std::isfinite(e2)) throw NumericalError("criterion not finite");
      entry.e2 = e2;
      entry.ok = true;
    } catch (const Error& err) {
      entry.message = err.what();
    }
    out.table.push_back(std::move(entry));
  }
  for (std::size_t k = 0; k < out.table.size(); ++k) {
    const auto& entry = out.table[k];
    if (!entry.ok) continue;
    if (out.chosen_index < 0 ||
        entry.e2 <= out.table[static_cast<std::size_t>(out.chosen_index)].e2)
      out.chosen_index = static_cast<int>(k);
  }
  if (out.chosen_index < 0) {
    std::string detail = "selection: every truncation candidate failed:";
    for (const auto& entry : out.table)
      detail += "\n  tau=" + std::to_string(entry.tau) + ": " + entry.message;
    throw NumericalError(detail);
  }
  out.tau = out.table[static_cast<std::size_t>(out.chosen_index)].tau;
  return out;
}

}  // namespace sicd
