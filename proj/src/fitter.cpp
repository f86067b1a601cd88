#include "sicd/fitter.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <string>

#include "sicd/errors.hpp"
#include "sicd/likelihood.hpp"
#include "sicd/nelder_mead.hpp"
#include "sicd/rng.hpp"

namespace sicd {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kAlternationTol = 1e-4;
constexpr int kMaxAlternations = 5;

// Data-derived ingredients shared by every stage of one fit.
struct Resolved {
  KMWeights weights;
  double tau0 = 0.0;
  TauWindow window0{0.0, 0.0};  // [min Z, tau0]
  double h0 = 0.0;
  Box box;
};

Resolved resolve(const CensoredSample& sample, const FitConfig& config) {
  Resolved r{km_jump_weights(sample)};
  r.tau0 = default_tau0(sample);
  r.window0 = TauWindow{sample.z.minCoeff(), r.tau0};

  if (config.h0) {
    r.h0 = *config.h0;
  } else {
    const double mean = sample.z.mean();
    const double var = (sample.z.array() - mean).square().sum() /
                       static_cast<double>(sample.n());
    r.h0 = std::sqrt(var) *
           std::pow(static_cast<double>(sample.n()), -1.0 / 7.0);
  }
  if (!(r.h0 > 0.0) || !std::isfinite(r.h0))
    throw NumericalError("pilot bandwidth is degenerate (constant responses?)");

  r.box = config.box ? *config.box : default_box(sample.x);
  if (r.box.lo.size() != sample.d())
    throw InvalidInput("trimming box dimension does not match covariates");
  return r;
}

Eigen::VectorXd embed(const Eigen::VectorXd& free) {
  Eigen::VectorXd theta(free.size() + 1);
  theta[0] = 1.0;
  theta.tail(free.size()) = free;
  return theta;
}

// Product-limit weighted least squares of Z on (1, X); the slope vector,
// normalized by its first coordinate, starts the index search. Falls back
// to the first unit vector when the first slope is numerically zero.
Eigen::VectorXd wls_index_start(const CensoredSample& sample,
                                const KMWeights& weights) {
  const Eigen::Index n = sample.n();
  const Eigen::Index d = sample.d();
  Eigen::MatrixXd m(n, d + 1);
  m.col(0).setOnes();
  m.rightCols(d) = sample.x;
  const Eigen::MatrixXd a = m.transpose() * weights.w.asDiagonal() * m;
  const Eigen::VectorXd b = m.transpose() * weights.w.cwiseProduct(sample.z);
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(d);
  theta[0] = 1.0;
  if (ldlt.info() != Eigen::Success) return theta;
  const Eigen::VectorXd beta = ldlt.solve(b);
  if (!beta.allFinite()) return theta;
  const Eigen::VectorXd slope = beta.tail(d);
  if (std::abs(slope[0]) <= 1e-10 * (1.0 + slope.norm())) return theta;
  return slope / slope[0];  // first coordinate becomes exactly 1
}

struct SearchOutcome {
  Eigen::VectorXd theta;  // full vector, first coordinate 1
  double value = -kInf;
  int iterations = 0;    // best restart
  int evaluations = 0;   // all restarts
  bool converged = false;
};

// Multi-start simplex maximization over the free coordinates: one start at
// `theta_start`, the rest jittered around it. Throws when no restart
// converges or the objective is degenerate everywhere.
SearchOutcome maximize_index(
    const std::function<double(const Eigen::VectorXd&)>& objective,
    const Eigen::VectorXd& theta_start, const OptimizerConfig& oc,
    double jitter_sd, std::mt19937_64& rng, const char* stage) {
  SimplexOptions so;
  so.max_iters = oc.max_iters;
  so.x_tol = oc.x_tolerance;
  so.f_tol = oc.f_tolerance;

  const Eigen::Index dp = theta_start.size() - 1;
  const Eigen::VectorXd t0 = theta_start.tail(dp);
  const auto free_objective = [&](const Eigen::VectorXd& t) {
    return objective(embed(t));
  };
  std::normal_distribution<double> gauss(0.0, jitter_sd);

  SearchOutcome out;
  std::string trace;
  for (int r = 0; r < oc.restarts; ++r) {
    Eigen::VectorXd start = t0;
    if (r > 0)
      for (Eigen::Index k = 0; k < dp; ++k) start[k] += gauss(rng);
    const SimplexResult res = maximize_simplex(free_objective, start, so);
    out.evaluations += res.evaluations;
    out.converged = out.converged || res.converged;
    if (res.value > out.value) {
      out.value = res.value;
      out.theta = embed(res.x);
      out.iterations = res.iterations;
    }
    trace += "\n  restart " + std::to_string(r) +
             ": value=" + std::to_string(res.value) +
             " iterations=" + std::to_string(res.iterations) +
             (res.converged ? " converged" : " not converged");
  }
  if (!out.converged)
    throw NumericalError(std::string(stage) +
                         ": optimizer failed to converge in " +
                         std::to_string(oc.restarts) + " restarts" + trace);
  if (out.value == -kInf)
    throw NumericalError(std::string(stage) +
                         ": objective degenerate at every evaluated point" +
                         trace);
  return out;
}

struct Branch {
  Eigen::VectorXd theta;
  double h = 0.0;
  AsymptoticComponents ac;
  ConvergenceReport conv;
  int contributing = 0;
  int excluded = 0;
  int clamped = 0;
};

// One truncation branch: alternate bandwidth cross-validation and index
// maximization over the ball around theta_n until a fixed point (the
// bandwidth lives on a finite grid, so its part of the test is exact
// equality), then compute the plug-in asymptotic components at tau.
Branch tau_branch(const CensoredSample& sample, const Resolved& r,
                  const FitConfig& config, const Eigen::VectorXd& theta_n,
                  const TrimmingFn& j0, double tau,
                  const std::vector<double>& h_grid) {
  const TauWindow window{r.window0.lo, tau};
  const Eigen::Index dp = sample.d() - 1;
  const Eigen::VectorXd tn_free = theta_n.tail(dp);
  const double radius = config.neighborhood_radius;
  std::mt19937_64 rng = substream(config.seed, stream_of(tau));

  const auto in_ball = [&](const Eigen::VectorXd& theta) {
    return (theta.tail(dp) - tn_free).norm() <= radius;
  };

  Branch b;
  b.theta = theta_n;
  std::optional<LikelihoodEvaluator> eval;

  if (config.exact_cv_per_theta) {
    // Re-select the bandwidth at every single theta (cost grows with the
    // grid, meant for small samples); one maximization, no alternation.
    const auto objective = [&](const Eigen::VectorXd& theta) -> double {
      if (!in_ball(theta)) return -kInf;
      try {
        const CVBandwidth cv =
            cv_bandwidth(sample, r.weights, theta, window, h_grid,
                         config.quadrature_points);
        const LikelihoodEvaluator ev(sample, r.weights, window, cv.h, j0,
                                     config.leave_one_out);
        const LoglikResult res = ev(theta);
        return res.contributing == 0 ? -kInf : res.value;
      } catch (const NumericalError&) {
        return -kInf;
      }
    };
    const SearchOutcome so =
        with_stage("index maximization", [&] {
          return maximize_index(objective, theta_n, config.optimizer,
                                radius / 3.0, rng, "exact-bandwidth search");
        });
    b.theta = objective(theta_n) >= so.value ? theta_n : so.theta;
    b.h = with_stage("bandwidth selection", [&] {
            return cv_bandwidth(sample, r.weights, b.theta, window, h_grid,
                                config.quadrature_points);
          }).h;
    b.conv.alternations = 1;
    b.conv.fixed_point = true;
    b.conv.optimizer_iterations = so.iterations;
    b.conv.optimizer_evaluations = so.evaluations;
    b.conv.optimizer_converged = so.converged;
    eval.emplace(sample, r.weights, window, b.h, j0, config.leave_one_out);
  } else {
    double h_prev = -1.0;
    for (int round = 1; round <= kMaxAlternations; ++round) {
      const double h = with_stage("bandwidth selection", [&] {
                         return cv_bandwidth(sample, r.weights, b.theta,
                                             window, h_grid,
                                             config.quadrature_points);
                       }).h;
      eval.emplace(sample, r.weights, window, h, j0, config.leave_one_out);
      const auto objective = [&](const Eigen::VectorXd& theta) -> double {
        if (!in_ball(theta)) return -kInf;
        const LoglikResult res = (*eval)(theta);
        return res.contributing == 0 ? -kInf : res.value;
      };
      const SearchOutcome so =
          with_stage("index maximization", [&] {
            return maximize_index(objective, b.theta, config.optimizer,
                                  radius / 3.0, rng, "neighborhood search");
          });

      // Monotone safeguard: never move to a point worse than the incumbent
      // or the preliminary center at this bandwidth. Keeping the incumbent
      // on ties lets the alternation reach an exact fixed point.
      const Eigen::VectorXd theta_prev = b.theta;
      const double v_inc = objective(theta_prev);
      const double v_center = objective(theta_n);
      if (so.value > v_inc && so.value >= v_center)
        b.theta = so.theta;
      else if (v_center > v_inc)
        b.theta = theta_n;
      b.h = h;
      b.conv.alternations = round;
      b.conv.optimizer_iterations = so.iterations;
      b.conv.optimizer_evaluations = so.evaluations;
      b.conv.optimizer_converged = so.converged;

      const double theta_change = (b.theta - theta_prev).norm();
      if (h == h_prev &&
          theta_change <= kAlternationTol * std::max(1.0, theta_prev.norm())) {
        b.conv.fixed_point = true;
        break;
      }
      h_prev = h;
    }
  }

  const LoglikResult tallies = (*eval)(b.theta);
  b.contributing = tallies.contributing;
  b.excluded = tallies.excluded;
  b.clamped = tallies.clamped;
  b.ac = with_stage("asymptotic components", [&] {
    return asymptotic_components(sample, r.weights, b.theta, b.h, window, tau,
                                 j0);
  });
  return b;
}

// Sandwich covariance V^+ Delta V^+ with the singular flag from the
// pseudo-inverse.
std::pair<Eigen::MatrixXd, bool> sandwich(const Eigen::MatrixXd& v_hat,
                                          const Eigen::MatrixXd& delta_hat) {
  bool singular = false;
  const Eigen::MatrixXd pinv = pseudo_inverse_sym(v_hat, &singular);
  return {pinv * delta_hat * pinv, singular};
}

IndexModelFit assemble(const Branch& branch, const Eigen::VectorXd& theta_n,
                       TruncationSelection sel, const Resolved& r,
                       double trim_level) {
  IndexModelFit out;
  out.theta_hat = branch.theta;
  out.theta_prelim = theta_n;
  out.h_hat = branch.h;
  out.tau_hat = sel.tau;
  out.e2_table = std::move(sel);
  out.V_hat = branch.ac.V_hat;
  out.Delta_hat = branch.ac.Delta_hat;
  auto [sigma, singular] = sandwich(branch.ac.V_hat, branch.ac.Delta_hat);
  out.Sigma_hat = std::move(sigma);
  out.sigma_singular = singular || branch.ac.singular;
  out.contributing = branch.contributing;
  out.excluded = branch.excluded;
  out.convergence = branch.conv;
  out.h0 = r.h0;
  out.tau0 = r.tau0;
  out.trim_level = trim_level;
  return out;
}

double resolve_trim_level(const CensoredSample& sample, const Resolved& r,
                          const FitConfig& config,
                          const Eigen::VectorXd& theta_n) {
  if (config.trim_level) return *config.trim_level;
  return with_stage("trimming", [&] {
    return default_trim_threshold(sample, r.weights, theta_n, r.h0,
                                  r.window0);
  });
}

TrimmingFn make_adaptive_trimming(const CensoredSample& sample,
                                  const Resolved& r,
                                  const Eigen::VectorXd& theta_n, double c) {
  const auto j0 = std::make_shared<AdaptiveTrimming>(sample, r.weights,
                                                     theta_n, r.h0, r.window0,
                                                     c);
  return [j0](const Eigen::RowVectorXd& row) { return (*j0)(row); };
}

std::vector<double> resolve_h_grid(const CensoredSample& sample,
                                   const FitConfig& config,
                                   const Eigen::VectorXd& theta_n) {
  if (config.h_grid) return *config.h_grid;
  return with_stage("bandwidth grid",
                    [&] { return default_h_grid(sample, theta_n); });
}

}  // namespace

void FitConfig::validate() const {
  if (!(neighborhood_radius > 0.0) || !std::isfinite(neighborhood_radius))
    throw InvalidInput("fit config: neighborhood radius must be positive");
  if (optimizer.max_iters < 1)
    throw InvalidInput("fit config: optimizer needs at least one iteration");
  if (!(optimizer.x_tolerance > 0.0) || !(optimizer.f_tolerance > 0.0))
    throw InvalidInput("fit config: optimizer tolerances must be positive");
  if (optimizer.restarts < 1)
    throw InvalidInput("fit config: need at least one optimizer start");
  if (quadrature_points < 2)
    throw InvalidInput("fit config: need at least 2 quadrature points");
  if (h0 && (!(*h0 > 0.0) || !std::isfinite(*h0)))
    throw InvalidInput("fit config: pilot bandwidth must be positive");
  if (trim_level && (!(*trim_level >= 0.0) || !std::isfinite(*trim_level)))
    throw InvalidInput("fit config: trimming level must be non-negative");
  if (h_grid && h_grid->empty())
    throw InvalidInput("fit config: bandwidth grid must not be empty");
  if (tau_grid && tau_grid->empty())
    throw InvalidInput("fit config: truncation grid must not be empty");
}

Eigen::VectorXd preliminary_fit(const CensoredSample& sample,
                                const FitConfig& config) {
  config.validate();
  if (sample.d() == 1) return Eigen::VectorXd::Ones(1);

  const Resolved r = resolve(sample, config);
  const ActiveSet act = ActiveSet::build(sample, r.weights, r.window0);
  if (static_cast<Eigen::Index>(act.size()) < sample.d() + 1)
    throw NumericalError(
        "preliminary fit: insufficient data, " + std::to_string(act.size()) +
        " usable observations for " + std::to_string(sample.d()) +
        " covariates");

  const Eigen::VectorXd theta_init = wls_index_start(sample, r.weights);
  const TrimmingFn jb = [box = r.box](const Eigen::RowVectorXd& row) {
    return box.contains(row) ? 1 : 0;
  };
  const LikelihoodEvaluator eval(sample, r.weights, r.window0, r.h0, jb,
                                 config.leave_one_out);
  const auto objective = [&](const Eigen::VectorXd& theta) -> double {
    const LoglikResult res = eval(theta);
    return res.contributing == 0 ? -kInf : res.value;
  };
  std::mt19937_64 rng = substream(config.seed, 0x70726531ULL);
  const SearchOutcome out = maximize_index(
      objective, theta_init, config.optimizer, 0.25, rng, "preliminary fit");
  return out.theta;
}

IndexModelFit fit(const CensoredSample& sample, const FitConfig& config) {
  config.validate();
  const Resolved r = resolve(sample, config);
  const Eigen::VectorXd theta_n = with_stage(
      "preliminary fit", [&] { return preliminary_fit(sample, config); });
  const double c = resolve_trim_level(sample, r, config, theta_n);
  const TrimmingFn j0 = with_stage("trimming", [&] {
    return make_adaptive_trimming(sample, r, theta_n, c);
  });
  const std::vector<double> h_grid = resolve_h_grid(sample, config, theta_n);
  const std::vector<double> tau_grid =
      config.tau_grid ? *config.tau_grid
                      : with_stage("truncation grid", [&] {
                          return default_tau_grid(sample, r.tau0);
                        });

  // Branches are computed inside the selection callback so per-candidate
  // failures land in the diagnostics table instead of aborting the fit.
  std::map<double, Branch> branches;
  const auto e2_of = [&](double tau) -> double {
    Branch b = tau_branch(sample, r, config, theta_n, j0, tau, h_grid);
    const double e2 = b.ac.E2;
    branches.emplace(tau, std::move(b));
    return e2;
  };
  TruncationSelection sel = with_stage(
      "truncation selection", [&] { return select_truncation(tau_grid, e2_of); });

  const Branch& final_branch = branches.at(sel.tau);
  return assemble(final_branch, theta_n, std::move(sel), r, c);
}

IndexModelFit fixed_tau_fit(const CensoredSample& sample,
                            const FitConfig& config, double tau) {
  config.validate();
  if (!std::isfinite(tau))
    throw InvalidInput("fixed-truncation fit: tau must be finite");
  const Resolved r = resolve(sample, config);

  // Lower sanity bound: the window must keep at least the bottom decile of
  // the uncensored follow-ups, or the estimate has nothing to stand on.
  std::vector<double> uncensored;
  for (Eigen::Index i = 0; i < sample.n(); ++i)
    if (sample.delta[i] == 1) uncensored.push_back(sample.z[i]);
  std::sort(uncensored.begin(), uncensored.end());
  const std::size_t rank =
      std::max<std::size_t>(1, (uncensored.size() + 9) / 10);
  if (tau < uncensored[rank - 1])
    throw NumericalError(
        "fixed-truncation fit: insufficient data, tau below the 10th "
        "percentile of uncensored follow-ups");

  const Eigen::VectorXd theta_n = with_stage(
      "preliminary fit", [&] { return preliminary_fit(sample, config); });
  const double c = resolve_trim_level(sample, r, config, theta_n);
  const TrimmingFn j0 = with_stage("trimming", [&] {
    return make_adaptive_trimming(sample, r, theta_n, c);
  });
  const std::vector<double> h_grid = resolve_h_grid(sample, config, theta_n);

  const Branch branch = tau_branch(sample, r, config, theta_n, j0, tau,
                                   h_grid);
  TruncationSelection sel;
  TruncationSelection::Entry entry;
  entry.tau = tau;
  entry.e2 = branch.ac.E2;
  entry.ok = true;
  sel.table.push_back(std::move(entry));
  sel.chosen_index = 0;
  sel.tau = tau;
  return assemble(branch, theta_n, std::move(sel), r, c);
}

StandardErrors standard_errors(const IndexModelFit& fit, Eigen::Index n) {
  if (n < 1) throw InvalidInput("standard errors: sample size must be positive");
  if (fit.V_hat.rows() != fit.Delta_hat.rows())
    throw InvalidInput("standard errors: V and Delta dimensions disagree");
  StandardErrors out;
  auto [sigma, singular] = sandwich(fit.V_hat, fit.Delta_hat);
  out.singular = singular;
  out.se = (sigma.diagonal() / static_cast<double>(n)).cwiseSqrt();
  out.sigma_over_n = std::move(sigma);
  out.sigma_over_n /= static_cast<double>(n);
  return out;
}

}  // namespace sicd
