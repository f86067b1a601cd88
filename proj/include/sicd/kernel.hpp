#pragma once

#include <cmath>
#include <cstddef>

namespace sicd {

// Fourth-order smoothing kernel built from the parabolic kernel
// k(u) = (3/4)(1 - u^2) on [-1, 1] as K = 2k - k*k (twicing). Piecewise
// quintic, even, supported on [-2, 2], integrates to 1 with vanishing first
// three moments and fourth moment -6/25. K(0) = 9/10. The first derivative
// jumps at |u| = 1 (-81/32 from the left, 15/32 from the right).
inline constexpr double kernel_support = 2.0;
inline constexpr double kernel_at_zero = 0.9;
inline constexpr double kernel_fourth_moment = -6.0 / 25.0;

namespace kern_detail {

// Polynomial pieces in t = |u|, coefficients from highest degree down.
// Exact rationals; the two value pieces agree at t = 1 (-33/160) and the
// outer piece vanishes at t = 2.
inline constexpr double val_lo[6] = {3.0 / 160, 0.0, -3.0 / 8,
                                     -3.0 / 4,  0.0, 9.0 / 10};
inline constexpr double val_hi[6] = {3.0 / 160, 0.0, -3.0 / 8,
                                     3.0 / 4,   0.0, -3.0 / 5};
inline constexpr double d1_lo[5] = {3.0 / 32, 0.0, -9.0 / 8, -3.0 / 2, 0.0};
inline constexpr double d1_hi[5] = {3.0 / 32, 0.0, -9.0 / 8, 3.0 / 2, 0.0};
inline constexpr double d2_lo[4] = {3.0 / 8, 0.0, -9.0 / 4, -3.0 / 2};
inline constexpr double d2_hi[4] = {3.0 / 8, 0.0, -9.0 / 4, 3.0 / 2};

// Plain Horner walk. Kept as separate multiply and add so every backend
// performs the identical rounding sequence; the build disables fp
// contraction so this cannot silently become a fused multiply-add.
template <std::size_t N>
inline double horner(const double (&c)[N], double t) {
  double r = c[0];
  for (std::size_t k = 1; k < N; ++k) r = r * t + c[k];
  return r;
}

}  // namespace kern_detail

inline double kernel_eval(double u) {
  const double t = std::fabs(u);
  if (!(t < 2.0)) return 0.0;
  return t < 1.0 ? kern_detail::horner(kern_detail::val_lo, t)
                 : kern_detail::horner(kern_detail::val_hi, t);
}

inline double kernel_deriv(double u) {
  const double t = std::fabs(u);
  if (!(t < 2.0)) return 0.0;
  const double p = t < 1.0 ? kern_detail::horner(kern_detail::d1_lo, t)
                           : kern_detail::horner(kern_detail::d1_hi, t);
  return u < 0.0 ? -p : p;
}

inline double kernel_second_deriv(double u) {
  const double t = std::fabs(u);
  if (!(t < 2.0)) return 0.0;
  return t < 1.0 ? kern_detail::horner(kern_detail::d2_lo, t)
                 : kern_detail::horner(kern_detail::d2_hi, t);
}

}  // namespace sicd
