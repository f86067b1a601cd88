// AVX2 backend. This translation unit is the only one built with -mavx2 (and
// without FMA), so vector instructions cannot leak into code that runs on
// CPUs lacking them. Falls back to a throwing stub when the build has no
// AVX2 target support.

#include <cstddef>

#if defined(__AVX2__)
#include <immintrin.h>
#endif

#include "sicd/errors.hpp"
#include "sicd/kernel.hpp"
#include "sicd/simd/kernel_ops.hpp"

namespace sicd::simd {

#if defined(__AVX2__)

namespace {

template <std::size_t N>
inline __m256d horner4(const double (&c)[N], __m256d t) {
  __m256d r = _mm256_set1_pd(c[0]);
  for (std::size_t k = 1; k < N; ++k)
    r = _mm256_add_pd(_mm256_mul_pd(r, t), _mm256_set1_pd(c[k]));
  return r;
}

inline __m256d kernel4(__m256d u, int order) {
  const __m256d sign = _mm256_set1_pd(-0.0);
  const __m256d t = _mm256_andnot_pd(sign, u);
  const __m256d inside = _mm256_cmp_pd(t, _mm256_set1_pd(2.0), _CMP_LT_OQ);
  const __m256d lo_mask = _mm256_cmp_pd(t, _mm256_set1_pd(1.0), _CMP_LT_OQ);
  __m256d p;
  switch (order) {
    case 0:
      p = _mm256_blendv_pd(horner4(kern_detail::val_hi, t),
                           horner4(kern_detail::val_lo, t), lo_mask);
      break;
    case 1: {
      p = _mm256_blendv_pd(horner4(kern_detail::d1_hi, t),
                           horner4(kern_detail::d1_lo, t), lo_mask);
      const __m256d neg =
          _mm256_cmp_pd(u, _mm256_setzero_pd(), _CMP_LT_OQ);
      p = _mm256_blendv_pd(p, _mm256_xor_pd(p, sign), neg);
      break;
    }
    default:
      p = _mm256_blendv_pd(horner4(kern_detail::d2_hi, t),
                           horner4(kern_detail::d2_lo, t), lo_mask);
      break;
  }
  return _mm256_and_pd(p, inside);
}

inline double reduce4(__m256d acc) {
  const __m128d lo = _mm256_castpd256_pd128(acc);
  const __m128d hi = _mm256_extractf128_pd(acc, 1);
  const double s0 = _mm_cvtsd_f64(lo);
  const double s1 = _mm_cvtsd_f64(_mm_unpackhi_pd(lo, lo));
  const double s2 = _mm_cvtsd_f64(hi);
  const double s3 = _mm_cvtsd_f64(_mm_unpackhi_pd(hi, hi));
  return (s0 + s1) + (s2 + s3);
}

void kernel_transformed_avx2(const double* x, std::size_t n, double c,
                             double inv_h, int order, double* out) {
  if (order < 0 || order > 2)
    throw InvalidInput("kernel batch: derivative order must be 0, 1 or 2");
  const __m256d cv = _mm256_set1_pd(c);
  const __m256d hv = _mm256_set1_pd(inv_h);
  const std::size_t nb = n & ~std::size_t(3);
  for (std::size_t i = 0; i < nb; i += 4) {
    const __m256d u =
        _mm256_mul_pd(_mm256_sub_pd(cv, _mm256_loadu_pd(x + i)), hv);
    _mm256_storeu_pd(out + i, kernel4(u, order));
  }
  for (std::size_t i = nb; i < n; ++i) {
    const double u = (c - x[i]) * inv_h;
    out[i] = order == 0   ? kernel_eval(u)
             : order == 1 ? kernel_deriv(u)
                          : kernel_second_deriv(u);
  }
}

double dot_avx2(const double* x, const double* y, std::size_t n) {
  const std::size_t nb = n & ~std::size_t(3);
  __m256d acc = _mm256_setzero_pd();
  for (std::size_t i = 0; i < nb; i += 4)
    acc = _mm256_add_pd(
        acc, _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  double s = reduce4(acc);
  for (std::size_t i = nb; i < n; ++i) s += x[i] * y[i];
  return s;
}

double dot3_avx2(const double* x, const double* y, const double* w,
                 std::size_t n) {
  const std::size_t nb = n & ~std::size_t(3);
  __m256d acc = _mm256_setzero_pd();
  for (std::size_t i = 0; i < nb; i += 4) {
    const __m256d xy =
        _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i));
    acc = _mm256_add_pd(acc, _mm256_mul_pd(xy, _mm256_loadu_pd(w + i)));
  }
  double s = reduce4(acc);
  for (std::size_t i = nb; i < n; ++i) s += (x[i] * y[i]) * w[i];
  return s;
}

void mul_avx2(const double* x, const double* y, std::size_t n, double* out) {
  const std::size_t nb = n & ~std::size_t(3);
  for (std::size_t i = 0; i < nb; i += 4)
    _mm256_storeu_pd(
        out + i,
        _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  for (std::size_t i = nb; i < n; ++i) out[i] = x[i] * y[i];
}

double sum_avx2(const double* x, std::size_t n) {
  const std::size_t nb = n & ~std::size_t(3);
  __m256d acc = _mm256_setzero_pd();
  for (std::size_t i = 0; i < nb; i += 4)
    acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
  double s = reduce4(acc);
  for (std::size_t i = nb; i < n; ++i) s += x[i];
  return s;
}

}  // namespace

const Ops& avx2_ops() {
  static const Ops ops{kernel_transformed_avx2, dot_avx2, dot3_avx2, mul_avx2,
                       sum_avx2};
  return ops;
}

bool avx2_compiled() { return true; }

#else  // !defined(__AVX2__)

const Ops& avx2_ops() {
  throw NumericalError("AVX2 backend was not built into this binary");
}

bool avx2_compiled() { return false; }

#endif

}  // namespace sicd::simd
