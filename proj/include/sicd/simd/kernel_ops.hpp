#pragma once

#include <cstddef>

namespace sicd::simd {

// Batched primitives behind the kernel-sum inner loops. Every backend is
// required to produce bit-identical doubles: reductions accumulate into four
// interleaved partial sums (element i feeds partial i mod 4 over the blocked
// prefix), combine them as (s0 + s1) + (s2 + s3), then fold the tail in
// order; products are never fused into the following add.
struct Ops {
  // out[i] = K^(order)((c - x[i]) * inv_h), order in {0, 1, 2}.
  void (*kernel_transformed)(const double* x, std::size_t n, double c,
                             double inv_h, int order, double* out);
  double (*dot)(const double* x, const double* y, std::size_t n);
  double (*dot3)(const double* x, const double* y, const double* w,
                 std::size_t n);
  void (*mul)(const double* x, const double* y, std::size_t n, double* out);
  double (*sum)(const double* x, std::size_t n);
};

enum class Backend { scalar, avx2 };

// Reference implementation, always available.
const Ops& scalar_ops();

// AVX2 implementation; call only if avx2_supported().
const Ops& avx2_ops();
// True when the binary contains the AVX2 backend at all.
bool avx2_compiled();
// True when the backend is both compiled in and runnable on this CPU.
bool avx2_supported();

// Backend picked once per process: the SICD_SIMD environment variable
// ("scalar", "avx2", "auto"; default auto) intersected with CPU support.
// Requesting avx2 on a CPU without it is an input error.
Backend active_backend();
const char* backend_name(Backend b);
const Ops& ops();

}  // namespace sicd::simd
