#include "subseg/kern/kernels.hpp"

namespace subseg::kern {

namespace {

template <class T>
T dot_scalar(const T* a, const T* b, size_t n) {
  T acc = 0;
  for (size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

template <class T>
void axpy_scalar(T alpha, const T* x, T* y, size_t n) {
  for (size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

template <class T>
void scale_scalar(T* x, size_t n, T alpha) {
  for (size_t i = 0; i < n; ++i) x[i] *= alpha;
}

template <class T>
void vadd_scalar(const T* x, T* y, size_t n) {
  for (size_t i = 0; i < n; ++i) y[i] += x[i];
}

template <class T>
T reduce_max_scalar(const T* x, size_t n) {
  T m = x[0];
  for (size_t i = 1; i < n; ++i)
    if (x[i] > m) m = x[i];
  return m;
}

template <class T>
T reduce_sum_scalar(const T* x, size_t n) {
  T s = 0;
  for (size_t i = 0; i < n; ++i) s += x[i];
  return s;
}

template <class T>
void matmul_nn_scalar(const T* a, const T* b, T* c, size_t m, size_t k, size_t n) {
  for (size_t i = 0; i < m; ++i)
    for (size_t l = 0; l < k; ++l) axpy_scalar(a[i * k + l], b + l * n, c + i * n, n);
}

template <class T>
void matmul_nt_scalar(const T* a, const T* b, T* c, size_t m, size_t k, size_t n) {
  for (size_t i = 0; i < m; ++i)
    for (size_t j = 0; j < n; ++j) c[i * n + j] += dot_scalar(a + i * k, b + j * k, k);
}

template <class T>
void matmul_tn_scalar(const T* a, const T* b, T* c, size_t m, size_t k, size_t n) {
  for (size_t i = 0; i < m; ++i)
    for (size_t l = 0; l < k; ++l) axpy_scalar(a[i * k + l], b + i * n, c + l * n, n);
}

template <class T>
Backend<T> make_scalar_backend() {
  Backend<T> be{};
  be.dot = dot_scalar<T>;
  be.axpy = axpy_scalar<T>;
  be.scale = scale_scalar<T>;
  be.vadd = vadd_scalar<T>;
  be.reduce_max = reduce_max_scalar<T>;
  be.reduce_sum = reduce_sum_scalar<T>;
  be.matmul_nn = matmul_nn_scalar<T>;
  be.matmul_nt = matmul_nt_scalar<T>;
  be.matmul_tn = matmul_tn_scalar<T>;
  return be;
}

}  // namespace

template <>
const Backend<float>& scalar_backend<float>() {
  static const Backend<float> be = make_scalar_backend<float>();
  return be;
}

template <>
const Backend<double>& scalar_backend<double>() {
  static const Backend<double> be = make_scalar_backend<double>();
  return be;
}

}  // namespace subseg::kern
