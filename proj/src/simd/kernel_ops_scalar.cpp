#include <cstddef>

#include "sicd/errors.hpp"
#include "sicd/kernel.hpp"
#include "sicd/simd/kernel_ops.hpp"

namespace sicd::simd {
namespace {

void kernel_transformed_scalar(const double* x, std::size_t n, double c,
                               double inv_h, int order, double* out) {
  switch (order) {
    case 0:
      for (std::size_t i = 0; i < n; ++i)
        out[i] = kernel_eval((c - x[i]) * inv_h);
      return;
    case 1:
      for (std::size_t i = 0; i < n; ++i)
        out[i] = kernel_deriv((c - x[i]) * inv_h);
      return;
    case 2:
      for (std::size_t i = 0; i < n; ++i)
        out[i] = kernel_second_deriv((c - x[i]) * inv_h);
      return;
    default:
      throw InvalidInput("kernel batch: derivative order must be 0, 1 or 2");
  }
}

double dot_scalar(const double* x, const double* y, std::size_t n) {
  const std::size_t nb = n & ~std::size_t(3);
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  for (std::size_t i = 0; i < nb; i += 4) {
    s0 += x[i] * y[i];
    s1 += x[i + 1] * y[i + 1];
    s2 += x[i + 2] * y[i + 2];
    s3 += x[i + 3] * y[i + 3];
  }
  double s = (s0 + s1) + (s2 + s3);
  for (std::size_t i = nb; i < n; ++i) s += x[i] * y[i];
  return s;
}

double dot3_scalar(const double* x, const double* y, const double* w,
                   std::size_t n) {
  const std::size_t nb = n & ~std::size_t(3);
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  for (std::size_t i = 0; i < nb; i += 4) {
    s0 += (x[i] * y[i]) * w[i];
    s1 += (x[i + 1] * y[i + 1]) * w[i + 1];
    s2 += (x[i + 2] * y[i + 2]) * w[i + 2];
    s3 += (x[i + 3] * y[i + 3]) * w[i + 3];
  }
  double s = (s0 + s1) + (s2 + s3);
  for (std::size_t i = nb; i < n; ++i) s += (x[i] * y[i]) * w[i];
  return s;
}

void mul_scalar(const double* x, const double* y, std::size_t n, double* out) {
  for (std::size_t i = 0; i < n; ++i) out[i] = x[i] * y[i];
}

double sum_scalar(const double* x, std::size_t n) {
  const std::size_t nb = n & ~std::size_t(3);
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  for (std::size_t i = 0; i < nb; i += 4) {
    s0 += x[i];
    s1 += x[i + 1];
    s2 += x[i + 2];
    s3 += x[i + 3];
  }
  double s = (s0 + s1) + (s2 + s3);
  for (std::size_t i = nb; i < n; ++i) s += x[i];
  return s;
}

}  // namespace

const Ops& scalar_ops() {
  static const Ops ops{kernel_transformed_scalar, dot_scalar, dot3_scalar,
                       mul_scalar, sum_scalar};
  return ops;
}

}  // namespace sicd::simd
