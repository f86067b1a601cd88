#include <doctest.h>

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "sicd/kernel.hpp"
#include "sicd/simd/kernel_ops.hpp"

using namespace sicd::simd;

namespace {

std::vector<double> random_vec(std::mt19937_64& rng, std::size_t n,
                               double lo, double hi) {
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<double> v(n);
  for (auto& e : v) e = dist(rng);
  return v;
}

const std::vector<std::size_t> sizes = {0,  1,  2,  3,   4,   5,    7,
                                        8,  13, 31, 64,  100, 255,  256,
                                        257, 1000, 1001, 1002, 1003};

}  // namespace

TEST_CASE("scalar batch kernel agrees with the pointwise reference") {
  std::mt19937_64 rng(101);
  const Ops& s = scalar_ops();
  for (std::size_t n : sizes) {
    const auto x = random_vec(rng, n, -3.0, 9.0);
    const double c = 2.5, inv_h = 1.0 / 0.7;
    std::vector<double> out(n, -1.0);
    s.kernel_transformed(x.data(), n, c, inv_h, 0, out.data());
    for (std::size_t i = 0; i < n; ++i)
      CHECK(out[i] == sicd::kernel_eval((c - x[i]) * inv_h));
    s.kernel_transformed(x.data(), n, c, inv_h, 1, out.data());
    for (std::size_t i = 0; i < n; ++i)
      CHECK(out[i] == sicd::kernel_deriv((c - x[i]) * inv_h));
    s.kernel_transformed(x.data(), n, c, inv_h, 2, out.data());
    for (std::size_t i = 0; i < n; ++i)
      CHECK(out[i] == sicd::kernel_second_deriv((c - x[i]) * inv_h));
  }
}

TEST_CASE("scalar reductions are accurate against a long-double reference") {
  std::mt19937_64 rng(202);
  const Ops& s = scalar_ops();
  const auto x = random_vec(rng, 1001, -5.0, 5.0);
  const auto y = random_vec(rng, 1001, -2.0, 2.0);
  long double ref = 0.0L;
  for (std::size_t i = 0; i < x.size(); ++i)
    ref += static_cast<long double>(x[i]) * y[i];
  CHECK(s.dot(x.data(), y.data(), x.size()) ==
        doctest::Approx(static_cast<double>(ref)).epsilon(1e-12));
}

TEST_CASE("vector backend reproduces the scalar backend bit for bit") {
  if (!avx2_supported()) {
    MESSAGE("AVX2 not available here; cross-backend check skipped");
    return;
  }
  const Ops& s = scalar_ops();
  const Ops& v = avx2_ops();
  std::mt19937_64 rng(303);

  for (std::size_t n : sizes) {
    // Arguments straddle the support edges and both polynomial pieces.
    const auto x = random_vec(rng, n, -4.0, 4.0);
    const auto y = random_vec(rng, n, -1.5, 1.5);
    const auto w = random_vec(rng, n, 0.0, 1.0);

    for (int order = 0; order <= 2; ++order) {
      for (double c : {-1.25, 0.0, 2.0}) {
        for (double h : {0.35, 1.0, 2.6}) {
          std::vector<double> out_s(n, 0.0), out_v(n, 0.0);
          s.kernel_transformed(x.data(), n, c, 1.0 / h, order, out_s.data());
          v.kernel_transformed(x.data(), n, c, 1.0 / h, order, out_v.data());
          for (std::size_t i = 0; i < n; ++i) CHECK(out_s[i] == out_v[i]);
        }
      }
    }

    CHECK(s.dot(x.data(), y.data(), n) == v.dot(x.data(), y.data(), n));
    CHECK(s.dot3(x.data(), y.data(), w.data(), n) ==
          v.dot3(x.data(), y.data(), w.data(), n));
    CHECK(s.sum(x.data(), n) == v.sum(x.data(), n));

    std::vector<double> prod_s(n, 0.0), prod_v(n, 0.0);
    s.mul(x.data(), y.data(), n, prod_s.data());
    v.mul(x.data(), y.data(), n, prod_v.data());
    for (std::size_t i = 0; i < n; ++i) CHECK(prod_s[i] == prod_v[i]);
  }
}

TEST_CASE("backends agree on kernel arguments exactly at piece boundaries") {
  if (!avx2_supported()) return;
  const Ops& s = scalar_ops();
  const Ops& v = avx2_ops();
  const std::vector<double> x = {-2.0, -1.0, 0.0, 1.0, 2.0,
                                 std::nextafter(1.0, 0.0),
                                 std::nextafter(1.0, 2.0),
                                 std::nextafter(2.0, 1.0),
                                 -0.0, 3.5, -3.5, 0.5};
  const std::size_t n = x.size();
  for (int order = 0; order <= 2; ++order) {
    std::vector<double> out_s(n), out_v(n);
    s.kernel_transformed(x.data(), n, 0.0, -1.0, order, out_s.data());
    v.kernel_transformed(x.data(), n, 0.0, -1.0, order, out_v.data());
    for (std::size_t i = 0; i < n; ++i) CHECK(out_s[i] == out_v[i]);
  }
}

TEST_CASE("active backend resolves to a known name") {
  const Backend b = active_backend();
  const std::string name = backend_name(b);
  CHECK((name == "scalar" || name == "avx2"));
  const Ops& o = ops();
  const std::vector<double> x = {1.0, 2.0, 3.0, 4.0, 5.0};
  CHECK(o.sum(x.data(), x.size()) == 15.0);
}
