#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "subseg/kern/kernels.hpp"
#include "subseg/rng.hpp"

using namespace subseg;

namespace {

template <class T>
std::vector<T> random_vec(Rng& rng, size_t n, double lo = -1.0, double hi = 1.0) {
  std::vector<T> v(n);
  for (auto& x : v) x = static_cast<T>(rng.next_uniform(lo, hi));
  return v;
}

// Loose enough for FMA reassociation, tight enough to catch real bugs.
template <class T>
void check_close(T a, T b, double tol) {
  double denom = std::max({std::fabs(double(a)), std::fabs(double(b)), 1.0});
  CHECK(std::fabs(double(a) - double(b)) / denom <= tol);
}

template <class T>
void check_close_vec(const std::vector<T>& a, const std::vector<T>& b, double tol) {
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) check_close(a[i], b[i], tol);
}

template <class T>
void equivalence_suite(const kern::Backend<T>& ref, const kern::Backend<T>& alt, double tol) {
  Rng rng(0x5EED);
  for (size_t n : {1, 2, 3, 7, 8, 9, 15, 16, 31, 64, 67, 200}) {
    auto a = random_vec<T>(rng, n);
    auto b = random_vec<T>(rng, n);
    check_close(ref.dot(a.data(), b.data(), n), alt.dot(a.data(), b.data(), n), tol);
    check_close(ref.reduce_sum(a.data(), n), alt.reduce_sum(a.data(), n), tol);
    CHECK(ref.reduce_max(a.data(), n) == alt.reduce_max(a.data(), n));

    auto y1 = b, y2 = b;
    ref.axpy(T(0.37), a.data(), y1.data(), n);
    alt.axpy(T(0.37), a.data(), y2.data(), n);
    check_close_vec(y1, y2, tol);

    auto s1 = a, s2 = a;
    ref.scale(s1.data(), n, T(1.25));
    alt.scale(s2.data(), n, T(1.25));
    check_close_vec(s1, s2, tol);

    auto v1 = b, v2 = b;
    ref.vadd(a.data(), v1.data(), n);
    alt.vadd(a.data(), v2.data(), n);
    check_close_vec(v1, v2, tol);
  }
  for (int trial = 0; trial < 12; ++trial) {
    size_t m = 1 + rng.next_below(9), k = 1 + rng.next_below(17), n = 1 + rng.next_below(13);
    auto a = random_vec<T>(rng, m * k);
    auto bnn = random_vec<T>(rng, k * n);
    auto bnt = random_vec<T>(rng, n * k);
    auto btn = random_vec<T>(rng, m * n);
    std::vector<T> c1(m * n, T(0.5)), c2(m * n, T(0.5));
    ref.matmul_nn(a.data(), bnn.data(), c1.data(), m, k, n);
    alt.matmul_nn(a.data(), bnn.data(), c2.data(), m, k, n);
    check_close_vec(c1, c2, tol);

    std::vector<T> d1(m * n, T(0)), d2(m * n, T(0));
    ref.matmul_nt(a.data(), bnt.data(), d1.data(), m, k, n);
    alt.matmul_nt(a.data(), bnt.data(), d2.data(), m, k, n);
    check_close_vec(d1, d2, tol);

    std::vector<T> e1(k * n, T(0)), e2(k * n, T(0));
    ref.matmul_tn(a.data(), btn.data(), e1.data(), m, k, n);
    alt.matmul_tn(a.data(), btn.data(), e2.data(), m, k, n);
    check_close_vec(e1, e2, tol);
  }
}

}  // namespace

TEST_CASE("scalar kernels compute the obvious things") {
  const auto& be = kern::scalar_backend<double>();
  double a[3] = {1, 2, 3}, b[3] = {4, 5, 6};
  CHECK(be.dot(a, b, 3) == 32.0);
  CHECK(be.reduce_max(a, 3) == 3.0);
  CHECK(be.reduce_sum(b, 3) == 15.0);
  double y[3] = {1, 1, 1};
  be.axpy(2.0, a, y, 3);
  CHECK(y[0] == 3.0);
  CHECK(y[2] == 7.0);

  // 2x2 * 2x2 against hand arithmetic
  double m1[4] = {1, 2, 3, 4}, m2[4] = {5, 6, 7, 8}, c[4] = {0, 0, 0, 0};
  be.matmul_nn(m1, m2, c, 2, 2, 2);
  CHECK(c[0] == 19.0);
  CHECK(c[1] == 22.0);
  CHECK(c[2] == 43.0);
  CHECK(c[3] == 50.0);

  // nt: same product expressed with a transposed right factor
  double m2t[4] = {5, 7, 6, 8}, d[4] = {0, 0, 0, 0};
  be.matmul_nt(m1, m2t, d, 2, 2, 2);
  for (int i = 0; i < 4; ++i) CHECK(c[i] == d[i]);

  // tn: (m1^T * m2)
  double e[4] = {0, 0, 0, 0};
  be.matmul_tn(m1, m2, e, 2, 2, 2);
  CHECK(e[0] == 1 * 5 + 3 * 7);
  CHECK(e[1] == 1 * 6 + 3 * 8);
  CHECK(e[2] == 2 * 5 + 4 * 7);
  CHECK(e[3] == 2 * 6 + 4 * 8);
}

#if defined(SUBSEG_HAVE_AVX2)
TEST_CASE("avx2 kernels match the scalar reference") {
  if (!kern::avx2_supported()) {
    MESSAGE("AVX2 not supported on this CPU; skipping");
    return;
  }
  equivalence_suite<float>(kern::scalar_backend<float>(), kern::avx2_backend<float>(), 2e-5);
  equivalence_suite<double>(kern::scalar_backend<double>(), kern::avx2_backend<double>(), 1e-12);
}
#endif

TEST_CASE("runtime dispatch can be forced") {
  kern::Isa original = kern::active_isa();
  kern::force_isa(kern::Isa::Scalar);
  CHECK(kern::active_isa() == kern::Isa::Scalar);
  if (kern::avx2_supported()) {
    kern::force_isa(kern::Isa::Avx2);
    CHECK(kern::active_isa() == kern::Isa::Avx2);
  }
  kern::force_isa(original);
}
