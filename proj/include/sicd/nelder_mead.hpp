#pragma once

#include <Eigen/Dense>
#include <functional>

namespace sicd {

struct SimplexOptions {
  int max_iters = 400;      // outer simplex iterations
  double x_tol = 1e-7;      // max coordinate spread at convergence
  double f_tol = 1e-10;     // value spread at convergence
  double initial_step = 0.1;
};

struct SimplexResult {
  Eigen::VectorXd x;
  double value = 0.0;  // objective at x (maximization)
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
};

// Derivative-free downhill-simplex search, run on the negated objective so
// the result maximizes `objective`. Standard reflection/expansion/
// contraction/shrink coefficients, deterministic ordering (ties broken by
// vertex index), non-finite objective values treated as -infinity.
SimplexResult maximize_simplex(
    const std::function<double(const Eigen::VectorXd&)>& objective,
    const Eigen::VectorXd& start, const SimplexOptions& opts = {});

}  // namespace sicd
