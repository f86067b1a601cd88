#include "sicd/nelder_mead.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "sicd/errors.hpp"

namespace sicd {

namespace {

constexpr double kWorst = std::numeric_limits<double>::infinity();

double sanitize(double v) { return std::isfinite(v) ? v : kWorst; }

}  // namespace

SimplexResult maximize_simplex(
    const std::function<double(const Eigen::VectorXd&)>& objective,
    const Eigen::VectorXd& start, const SimplexOptions& opts) {
  if (!objective) throw InvalidInput("optimizer: objective is empty");
  if (opts.max_iters < 1 || !(opts.x_tol > 0.0) || !(opts.f_tol > 0.0) ||
      !(opts.initial_step > 0.0))
    throw InvalidInput("optimizer: options must be positive");

  SimplexResult res;
  const Eigen::Index d = start.size();
  // Internally minimize g = -objective.
  const auto g = [&](const Eigen::VectorXd& x) {
    ++res.evaluations;
    return sanitize(-objective(x));
  };

  if (d == 0) {
    res.x = start;
    res.value = objective(start);
    res.converged = true;
    return res;
  }

  std::vector<Eigen::VectorXd> pts(static_cast<std::size_t>(d) + 1, start);
  std::vector<double> vals(static_cast<std::size_t>(d) + 1);
  for (Eigen::Index k = 0; k < d; ++k)
    pts[static_cast<std::size_t>(k) + 1][k] +=
        opts.initial_step * std::max(1.0, std::abs(start[k]));
  for (std::size_t v = 0; v < pts.size(); ++v) vals[v] = g(pts[v]);

  std::vector<std::size_t> order(pts.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto sort_vertices = [&] {
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) {
                       return vals[a] < vals[b];
                     });
  };

  constexpr double alpha = 1.0;  // reflection
  constexpr double gamma = 2.0;  // expansion
  constexpr double rho = 0.5;    // contraction
  constexpr double sigma = 0.5;  // shrink

  for (res.iterations = 0; res.iterations < opts.max_iters;
       ++res.iterations) {
    sort_vertices();
    const std::size_t best = order.front();
    const std::size_t worst = order.back();
    const std::size_t second_worst = order[order.size() - 2];

    double spread_x = 0.0;
    for (std::size_t v = 0; v < pts.size(); ++v)
      spread_x = std::max(
          spread_x, (pts[v] - pts[best]).lpNorm<Eigen::Infinity>());
    const double spread_f =
        std::isfinite(vals[worst]) ? vals[worst] - vals[best] : kWorst;
    if (spread_x <= opts.x_tol) {
      res.converged = true;
      break;
    }
    if (spread_f <= opts.f_tol * (std::abs(vals[best]) + opts.f_tol)) {
      // Values have collapsed. If the simplex is still wide (vertices can
      // straddle an optimum with equal values), shrink and keep going.
      if (spread_x <= 100.0 * opts.x_tol) {
        res.converged = true;
        break;
      }
      for (std::size_t v = 0; v < pts.size(); ++v) {
        if (v == best) continue;
        pts[v] = pts[best] + sigma * (pts[v] - pts[best]);
        vals[v] = g(pts[v]);
      }
      continue;
    }

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(d);
    for (std::size_t v = 0; v < pts.size(); ++v)
      if (v != worst) centroid += pts[v];
    centroid /= static_cast<double>(d);

    const Eigen::VectorXd reflected =
        centroid + alpha * (centroid - pts[worst]);
    const double f_reflected = g(reflected);

    if (f_reflected < vals[best]) {
      const Eigen::VectorXd expanded =
          centroid + gamma * (reflected - centroid);
      const double f_expanded = g(expanded);
      if (f_expanded < f_reflected) {
        pts[worst] = expanded;
        vals[worst] = f_expanded;
      } else {
        pts[worst] = reflected;
        vals[worst] = f_reflected;
      }
      continue;
    }
    if (f_reflected < vals[second_worst]) {
      pts[worst] = reflected;
      vals[worst] = f_reflected;
      continue;
    }

    // Contract toward the better of the worst vertex and its reflection.
    const bool outside = f_reflected < vals[worst];
    const Eigen::VectorXd contracted =
        outside ? Eigen::VectorXd(centroid + rho * (reflected - centroid))
                : Eigen::VectorXd(centroid - rho * (centroid - pts[worst]));
    const double f_contracted = g(contracted);
    if (f_contracted < (outside ? f_reflected : vals[worst])) {
      pts[worst] = contracted;
      vals[worst] = f_contracted;
      continue;
    }

    for (std::size_t v = 0; v < pts.size(); ++v) {
      if (v == best) continue;
      pts[v] = pts[best] + sigma * (pts[v] - pts[best]);
      vals[v] = g(pts[v]);
    }
  }

  sort_vertices();
  res.x = pts[order.front()];
  const double best_val = vals[order.front()];
  res.value = best_val == kWorst ? -kWorst : -best_val;
  return res;
}

}  // namespace sicd
