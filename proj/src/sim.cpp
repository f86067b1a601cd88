#include "sicd/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "sicd/errors.hpp"
#include "sicd/rng.hpp"
#include "sicd/survival.hpp"

namespace sicd {

namespace {

constexpr std::uint64_t kCalibrationStream = 0;
constexpr int kCalibrationDraws = 100000;
constexpr double kCalibrationTol = 0.005;

// One covariate coordinate: 0.2 N(0,1) + 0.8 N(0.25, variance 2).
double draw_coordinate(std::mt19937_64& rng,
                       std::uniform_real_distribution<double>& unif,
                       std::normal_distribution<double>& gauss) {
  const bool first = unif(rng) < 0.2;
  const double g = gauss(rng);
  return first ? g : 0.25 + std::sqrt(2.0) * g;
}

}  // namespace

Eigen::VectorXd SimDesign::default_theta0() {
  Eigen::VectorXd theta(4);
  theta << 1.0, 0.5, 1.4, 0.2;
  return theta;
}

void SimDesign::validate() const {
  if (n < 20) throw InvalidInput("sim design: need n >= 20");
  if (reps < 1) throw InvalidInput("sim design: need at least 1 replication");
  if (!(target_p >= 0.0) || !(target_p < 0.9))
    throw InvalidInput("sim design: target censoring must lie in [0, 0.9)");
  if (!(lambda >= 0.0) || !std::isfinite(lambda))
    throw InvalidInput("sim design: censoring rate must be non-negative");
  if (theta0.size() < 1 || theta0[0] != 1.0)
    throw InvalidInput("sim design: theta0 must have first coordinate 1");
  if (!theta0.allFinite())
    throw InvalidInput("sim design: theta0 must be finite");
  fit_config.validate();
}

double calibrate_censoring_rate(const SimDesign& design, double target_p) {
  if (!(target_p >= 0.0) || !(target_p < 0.9))
    throw InvalidInput("calibration: target censoring must lie in [0, 0.9)");
  if (target_p < kCalibrationTol) return 0.0;

  // Common draws: responses Y_k and unit-exponential E_k, so the censoring
  // proportion p(lambda) = mean 1{Y_k > E_k / lambda} is monotone in lambda
  // along the bisection.
  std::mt19937_64 rng = substream(design.seed, kCalibrationStream);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::exponential_distribution<double> expo(1.0);
  const Eigen::Index d = design.theta0.size();

  Eigen::VectorXd y(kCalibrationDraws), e(kCalibrationDraws);
  Eigen::RowVectorXd x(d);
  for (int k = 0; k < kCalibrationDraws; ++k) {
    for (Eigen::Index j = 0; j < d; ++j)
      x[j] = draw_coordinate(rng, unif, gauss);
    const double index = (x * design.theta0)(0);
    const double eps =
        design.zero_noise ? 0.0 : std::sqrt(std::abs(index)) * gauss(rng);
    y[k] = index + eps;
    e[k] = expo(rng);
  }

  const auto proportion = [&](double lambda) {
    int censored = 0;
    for (int k = 0; k < kCalibrationDraws; ++k)
      if (y[k] > e[k] / lambda) ++censored;
    return static_cast<double>(censored) / kCalibrationDraws;
  };

  double hi = 1.0;
  int expansions = 0;
  while (proportion(hi) < target_p) {
    hi *= 2.0;
    if (++expansions > 60)
      throw NumericalError(
          "calibration: bisection bracket failure, censoring target "
          "unreachable");
  }
  double lo = 0.0;  // p(0+) = 0
  for (int iter = 0; iter < 200; ++iter) {
    const double mid = 0.5 * (lo + hi);
    const double p = proportion(mid);
    if (std::abs(p - target_p) <= kCalibrationTol) return mid;
    (p < target_p ? lo : hi) = mid;
  }
  throw NumericalError(
      "calibration: bisection failed to reach the target censoring "
      "proportion");
}

CensoredSample generate_dataset(const SimDesign& design, int rep_index) {
  design.validate();
  if (rep_index < 0) throw InvalidInput("sim: replication index must be >= 0");

  std::mt19937_64 rng =
      substream(design.seed, 1 + static_cast<std::uint64_t>(rep_index));
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::exponential_distribution<double> expo(1.0);

  const Eigen::Index d = design.theta0.size();
  Eigen::MatrixXd x(design.n, d);
  for (int i = 0; i < design.n; ++i)
    for (Eigen::Index j = 0; j < d; ++j)
      x(i, j) = draw_coordinate(rng, unif, gauss);

  Eigen::VectorXd y(design.n);
  for (int i = 0; i < design.n; ++i) {
    const double index = (x.row(i) * design.theta0)(0);
    const double eps =
        design.zero_noise ? 0.0 : std::sqrt(std::abs(index)) * gauss(rng);
    y[i] = index + eps;
  }

  Eigen::VectorXd z(design.n);
  Eigen::VectorXi delta(design.n);
  for (int i = 0; i < design.n; ++i) {
    // Exp(lambda) as Exp(1)/lambda: lambda = 0 yields +infinity, the
    // no-censoring limit, with an identical draw layout.
    const double c = expo(rng) / design.lambda;
    z[i] = std::min(y[i], c);
    delta[i] = y[i] <= c ? 1 : 0;
  }
  return {std::move(z), std::move(delta), std::move(x)};
}

MonteCarloReport monte_carlo_report(const SimDesign& design, FitMode mode) {
  design.validate();
  SimDesign resolved = design;
  if (resolved.lambda == 0.0 && resolved.target_p >= 0.005)
    resolved.lambda = calibrate_censoring_rate(design, design.target_p);

  const Eigen::Index dp = resolved.theta0.size() - 1;
  MonteCarloReport report;
  report.lambda = resolved.lambda;
  report.records.reserve(static_cast<std::size_t>(resolved.reps));

  for (int rep = 0; rep < resolved.reps; ++rep) {
    RepRecord rec;
    rec.rep = rep;
    try {
      const CensoredSample sample = generate_dataset(resolved, rep);
      const IndexModelFit f =
          mode == FitMode::adaptive_tau
              ? fit(sample, resolved.fit_config)
              : fixed_tau_fit(sample, resolved.fit_config,
                              default_tau0(sample));
      rec.ok = true;
      rec.theta_hat = f.theta_hat;
      rec.h_hat = f.h_hat;
      rec.tau_hat = f.tau_hat;

      const TruncationWeights tw = truncation_weights(sample, f.tau_hat);
      rec.retained = static_cast<int>(tw.retained);
      rec.weight_full = tw.full;
      rec.weight_trunc = tw.truncated;
    } catch (const Error& e) {
      rec.ok = false;
      rec.error = e.what();
    }
    report.records.push_back(std::move(rec));
  }

  for (const RepRecord& rec : report.records)
    rec.ok ? ++report.successes : ++report.failures;
  if (report.failures * 5 > resolved.reps)
    throw NumericalError("harness: " + std::to_string(report.failures) +
                         " of " + std::to_string(resolved.reps) +
                         " replications failed (over 20%)");

  const double r = report.successes;
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(dp);
  double mse = 0.0, mean_retained = 0.0, wf = 0.0, wt = 0.0;
  for (const RepRecord& rec : report.records) {
    if (!rec.ok) continue;
    const Eigen::VectorXd err =
        rec.theta_hat.tail(dp) - resolved.theta0.tail(dp);
    mean += rec.theta_hat.tail(dp);
    mse += err.squaredNorm();
    mean_retained += rec.retained;
    wf += rec.weight_full;
    wt += rec.weight_trunc;
  }
  mean /= r;
  report.bias = mean - resolved.theta0.tail(dp);
  report.mse = mse / r;
  report.mean_retained = mean_retained / r;
  report.weight_full = wf / r;
  report.weight_trunc = wt / r;

  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(dp, dp);
  for (const RepRecord& rec : report.records) {
    if (!rec.ok) continue;
    const Eigen::VectorXd centered = rec.theta_hat.tail(dp) - mean;
    const Eigen::MatrixXd outer = centered * centered.transpose();
    cov += outer;
  }
  report.covariance = cov / r;  // population covariance: the MSE identity
                                // mse = |bias|^2 + trace(cov) holds exactly
  return report;
}

WeightDiagnostics weight_diagnostics(const SimDesign& design) {
  const MonteCarloReport report =
      monte_carlo_report(design, FitMode::adaptive_tau);
  return {report.mean_retained, report.weight_full, report.weight_trunc};
}

}  // namespace sicd
