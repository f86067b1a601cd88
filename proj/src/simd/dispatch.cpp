#include <cstdlib>
#include <string>

#include "sicd/errors.hpp"
#include "sicd/simd/kernel_ops.hpp"

namespace sicd::simd {
namespace {

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(__i386__)
  return __builtin_cpu_supports("avx2") != 0;
#else
  return false;
#endif
}

Backend resolve() {
  const char* env = std::getenv("SICD_SIMD");
  const std::string v = env == nullptr ? "auto" : env;
  if (v == "scalar") return Backend::scalar;
  if (v == "avx2") {
    if (!avx2_supported())
      throw InvalidInput(
          "SICD_SIMD=avx2 requested but this build or CPU cannot run AVX2");
    return Backend::avx2;
  }
  if (v == "auto" || v.empty())
    return avx2_supported() ? Backend::avx2 : Backend::scalar;
  throw InvalidInput("SICD_SIMD must be one of scalar, avx2, auto (got '" +
                     v + "')");
}

}  // namespace

bool avx2_supported() { return avx2_compiled() && cpu_has_avx2(); }

Backend active_backend() {
  static const Backend b = resolve();
  return b;
}

const char* backend_name(Backend b) {
  return b == Backend::avx2 ? "avx2" : "scalar";
}

const Ops& ops() {
  static const Ops& o =
      active_backend() == Backend::avx2 ? avx2_ops() : scalar_ops();
  return o;
}

}  // namespace sicd::simd
