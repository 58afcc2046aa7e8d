#include "subseg/kern/kernels.hpp"

#if defined(SUBSEG_HAVE_AVX2)

#include <immintrin.h>

namespace subseg::kern {

namespace {

// float: 8 lanes ------------------------------------------------------------

inline float hsum256_ps(__m256 v) {
  __m128 lo = _mm256_castps256_ps128(v);
  __m128 hi = _mm256_extractf128_ps(v, 1);
  lo = _mm_add_ps(lo, hi);
  lo = _mm_hadd_ps(lo, lo);
  lo = _mm_hadd_ps(lo, lo);
  return _mm_cvtss_f32(lo);
}

float dot_f32(const float* a, const float* b, size_t n) {
  __m256 acc = _mm256_setzero_ps();
  size_t i = 0;
  for (; i + 8 <= n; i += 8)
    acc = _mm256_fmadd_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i), acc);
  float s = hsum256_ps(acc);
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_f32(float alpha, const float* x, float* y, size_t n) {
  __m256 va = _mm256_set1_ps(alpha);
  size_t i = 0;
  for (; i + 8 <= n; i += 8)
    _mm256_storeu_ps(y + i, _mm256_fmadd_ps(va, _mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void scale_f32(float* x, size_t n, float alpha) {
  __m256 va = _mm256_set1_ps(alpha);
  size_t i = 0;
  for (; i + 8 <= n; i += 8) _mm256_storeu_ps(x + i, _mm256_mul_ps(va, _mm256_loadu_ps(x + i)));
  for (; i < n; ++i) x[i] *= alpha;
}

void vadd_f32(const float* x, float* y, size_t n) {
  size_t i = 0;
  for (; i + 8 <= n; i += 8)
    _mm256_storeu_ps(y + i, _mm256_add_ps(_mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i)));
  for (; i < n; ++i) y[i] += x[i];
}

float reduce_max_f32(const float* x, size_t n) {
  size_t i = 0;
  float m = x[0];
  if (n >= 8) {
    __m256 vm = _mm256_loadu_ps(x);
    for (i = 8; i + 8 <= n; i += 8) vm = _mm256_max_ps(vm, _mm256_loadu_ps(x + i));
    alignas(32) float lanes[8];
    _mm256_store_ps(lanes, vm);
    m = lanes[0];
    for (int l = 1; l < 8; ++l)
      if (lanes[l] > m) m = lanes[l];
  }
  for (; i < n; ++i)
    if (x[i] > m) m = x[i];
  return m;
}

float reduce_sum_f32(const float* x, size_t n) {
  __m256 acc = _mm256_setzero_ps();
  size_t i = 0;
  for (; i + 8 <= n; i += 8) acc = _mm256_add_ps(acc, _mm256_loadu_ps(x + i));
  float s = hsum256_ps(acc);
  for (; i < n; ++i) s += x[i];
  return s;
}

// double: 4 lanes -----------------------------------------------------------

inline double hsum256_pd(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(lo, _mm_unpackhi_pd(lo, lo)));
}

double dot_f64(const double* a, const double* b, size_t n) {
  __m256d acc = _mm256_setzero_pd();
  size_t i = 0;
  for (; i + 4 <= n; i += 4)
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc);
  double s = hsum256_pd(acc);
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_f64(double alpha, const double* x, double* y, size_t n) {
  __m256d va = _mm256_set1_pd(alpha);
  size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void scale_f64(double* x, size_t n, double alpha) {
  __m256d va = _mm256_set1_pd(alpha);
  size_t i = 0;
  for (; i + 4 <= n; i += 4) _mm256_storeu_pd(x + i, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
  for (; i < n; ++i) x[i] *= alpha;
}

void vadd_f64(const double* x, double* y, size_t n) {
  size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  for (; i < n; ++i) y[i] += x[i];
}

double reduce_max_f64(const double* x, size_t n) {
  size_t i = 0;
  double m = x[0];
  if (n >= 4) {
    __m256d vm = _mm256_loadu_pd(x);
    for (i = 4; i + 4 <= n; i += 4) vm = _mm256_max_pd(vm, _mm256_loadu_pd(x + i));
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, vm);
    m = lanes[0];
    for (int l = 1; l < 4; ++l)
      if (lanes[l] > m) m = lanes[l];
  }
  for (; i < n; ++i)
    if (x[i] > m) m = x[i];
  return m;
}

double reduce_sum_f64(const double* x, size_t n) {
  __m256d acc = _mm256_setzero_pd();
  size_t i = 0;
  for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
  double s = hsum256_pd(acc);
  for (; i < n; ++i) s += x[i];
  return s;
}

// matmuls built on the vector kernels above ---------------------------------

template <class T, void (*Axpy)(T, const T*, T*, size_t)>
void matmul_nn_vec(const T* a, const T* b, T* c, size_t m, size_t k, size_t n) {
  for (size_t i = 0; i < m; ++i)
    for (size_t l = 0; l < k; ++l) Axpy(a[i * k + l], b + l * n, c + i * n, n);
}

template <class T, T (*Dot)(const T*, const T*, size_t)>
void matmul_nt_vec(const T* a, const T* b, T* c, size_t m, size_t k, size_t n) {
  for (size_t i = 0; i < m; ++i)
    for (size_t j = 0; j < n; ++j) c[i * n + j] += Dot(a + i * k, b + j * k, k);
}

template <class T, void (*Axpy)(T, const T*, T*, size_t)>
void matmul_tn_vec(const T* a, const T* b, T* c, size_t m, size_t k, size_t n) {
  for (size_t i = 0; i < m; ++i)
    for (size_t l = 0; l < k; ++l) Axpy(a[i * k + l], b + i * n, c + l * n, n);
}

}  // namespace

template <>
const Backend<float>& avx2_backend<float>() {
  static const Backend<float> be = [] {
    Backend<float> b{};
    b.dot = dot_f32;
    b.axpy = axpy_f32;
    b.scale = scale_f32;
    b.vadd = vadd_f32;
    b.reduce_max = reduce_max_f32;
    b.reduce_sum = reduce_sum_f32;
    b.matmul_nn = matmul_nn_vec<float, axpy_f32>;
    b.matmul_nt = matmul_nt_vec<float, dot_f32>;
    b.matmul_tn = matmul_tn_vec<float, axpy_f32>;
    return b;
  }();
  return be;
}

template <>
const Backend<double>& avx2_backend<double>() {
  static const Backend<double> be = [] {
    Backend<double> b{};
    b.dot = dot_f64;
    b.axpy = axpy_f64;
    b.scale = scale_f64;
    b.vadd = vadd_f64;
    b.reduce_max = reduce_max_f64;
    b.reduce_sum = reduce_sum_f64;
    b.matmul_nn = matmul_nn_vec<double, axpy_f64>;
    b.matmul_nt = matmul_nt_vec<double, dot_f64>;
    b.matmul_tn = matmul_tn_vec<double, axpy_f64>;
    return b;
  }();
  return be;
}

}  // namespace subseg::kern

#endif  // SUBSEG_HAVE_AVX2
