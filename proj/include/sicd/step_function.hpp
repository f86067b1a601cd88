#pragma once

#include <algorithm>
#include <cstddef>
#include <utility>
#include <vector>

#include "sicd/errors.hpp"

namespace sicd {

// Right-continuous piecewise-constant function on the real line.
// Value is 0 before the first jump; evaluation at t- is supported exactly
// (strict-inequality search, no epsilon shifting).
class StepFunction {
public:
  StepFunction() = default;

  // `times` strictly increasing; `cumulative[k]` is the value on
  // [times[k], times[k+1]).
  static StepFunction from_cumulative(std::vector<double> times,
                                      std::vector<double> cumulative) {
    if (times.size() != cumulative.size())
      throw InvalidInput("step function: times/values length mismatch");
    for (std::size_t k = 1; k < times.size(); ++k)
      if (!(times[k - 1] < times[k]))
        throw InvalidInput("step function: jump times must be strictly increasing");
    StepFunction f;
    f.times_ = std::move(times);
    f.cum_ = std::move(cumulative);
    return f;
  }

  static StepFunction from_jumps(std::vector<double> times,
                                 const std::vector<double>& sizes) {
    std::vector<double> cum(sizes.size());
    double acc = 0.0;
    for (std::size_t k = 0; k < sizes.size(); ++k) {
      acc += sizes[k];
      cum[k] = acc;
    }
    return from_cumulative(std::move(times), std::move(cum));
  }

  // f(t), right-continuous.
  double operator()(double t) const {
    auto it = std::upper_bound(times_.begin(), times_.end(), t);
    if (it == times_.begin()) return 0.0;
    return cum_[static_cast<std::size_t>(it - times_.begin()) - 1];
  }

  // f(t-): value just before t.
  double left_limit(double t) const {
    auto it = std::lower_bound(times_.begin(), times_.end(), t);
    if (it == times_.begin()) return 0.0;
    return cum_[static_cast<std::size_t>(it - times_.begin()) - 1];
  }

  double jump_at(double t) const { return (*this)(t)-left_limit(t); }

  std::size_t num_jumps() const { return times_.size(); }
  const std::vector<double>& jump_times() const { return times_; }
  const std::vector<double>& cumulative() const { return cum_; }
  double jump_size(std::size_t k) const {
    return k == 0 ? cum_[0] : cum_[k] - cum_[k - 1];
  }

private:
  std::vector<double> times_;
  std::vector<double> cum_;
};

}  // namespace sicd
