#pragma once

#include <cmath>
#include <vector>

#include "subseg/error.hpp"
#include "subseg/kern/kernels.hpp"
#include "subseg/tensor.hpp"

namespace subseg {

// Thin tensor wrappers over the kernel backend. Matrix arguments are 2-D
// row-major; the *_acc variants accumulate into their destination.

template <class T>
void matmul_nn_acc(const Tensor<T>& a, const Tensor<T>& b, Tensor<T>& c) {
  kern::backend<T>().matmul_nn(a.data(), b.data(), c.data(), a.rows(), a.cols(), b.cols());
}

template <class T>
Tensor<T> matmul_nn(const Tensor<T>& a, const Tensor<T>& b) {
  Tensor<T> c({a.rows(), b.cols()});
  matmul_nn_acc(a, b, c);
  return c;
}

// c[m x n] (+)= a[m x k] * b[n x k]^T
template <class T>
void matmul_nt_acc(const Tensor<T>& a, const Tensor<T>& b, Tensor<T>& c) {
  kern::backend<T>().matmul_nt(a.data(), b.data(), c.data(), a.rows(), a.cols(), b.rows());
}

template <class T>
Tensor<T> matmul_nt(const Tensor<T>& a, const Tensor<T>& b) {
  Tensor<T> c({a.rows(), b.rows()});
  matmul_nt_acc(a, b, c);
  return c;
}

// c[k x n] (+)= a[m x k]^T * b[m x n]
template <class T>
void matmul_tn_acc(const Tensor<T>& a, const Tensor<T>& b, Tensor<T>& c) {
  kern::backend<T>().matmul_tn(a.data(), b.data(), c.data(), a.rows(), a.cols(), b.cols());
}

template <class T>
Tensor<T> matmul_tn(const Tensor<T>& a, const Tensor<T>& b) {
  Tensor<T> c({a.cols(), b.cols()});
  matmul_tn_acc(a, b, c);
  return c;
}

template <class T>
void add_inplace(Tensor<T>& y, const Tensor<T>& x) {
  kern::backend<T>().vadd(x.data(), y.data(), y.numel());
}

template <class T>
void axpy_inplace(T alpha, const Tensor<T>& x, Tensor<T>& y) {
  kern::backend<T>().axpy(alpha, x.data(), y.data(), y.numel());
}

template <class T>
void scale_inplace(Tensor<T>& x, T alpha) {
  kern::backend<T>().scale(x.data(), x.numel(), alpha);
}

// Adds a bias vector to every row.
template <class T>
void add_row_bias(Tensor<T>& x, const Tensor<T>& bias) {
  for (size_t r = 0; r < x.rows(); ++r)
    kern::backend<T>().vadd(bias.data(), x.row(r), x.cols());
}

// bias gradient: column sums of dy.
template <class T>
void accumulate_colsum(const Tensor<T>& dy, Tensor<T>& db) {
  for (size_t r = 0; r < dy.rows(); ++r)
    kern::backend<T>().vadd(dy.row(r), db.data(), dy.cols());
}

template <class T>
void softmax_row(T* x, size_t n) {
  const auto& be = kern::backend<T>();
  T mx = be.reduce_max(x, n);
  for (size_t i = 0; i < n; ++i) x[i] = std::exp(x[i] - mx);
  T sum = be.reduce_sum(x, n);
  be.scale(x, n, T(1) / sum);
}

template <class T>
void softmax_rows_inplace(Tensor<T>& x) {
  for (size_t r = 0; r < x.rows(); ++r) softmax_row(x.row(r), x.cols());
}

// dx for y = softmax(x) given dy and y: dx = y .* (dy - sum(dy .* y)).
template <class T>
void softmax_row_backward(const T* y, const T* dy, T* dx, size_t n) {
  T dot = kern::backend<T>().dot(y, dy, n);
  for (size_t i = 0; i < n; ++i) dx[i] = y[i] * (dy[i] - dot);
}

template <class T>
void log_softmax_row(T* x, size_t n) {
  const auto& be = kern::backend<T>();
  T mx = be.reduce_max(x, n);
  T sum = 0;
  for (size_t i = 0; i < n; ++i) sum += std::exp(x[i] - mx);
  T lse = mx + std::log(sum);
  for (size_t i = 0; i < n; ++i) x[i] -= lse;
}

// GELU (exact erf form); smooth, so finite-difference checks stay clean.
template <class T>
inline T gelu(T x) {
  return T(0.5) * x * (T(1) + std::erf(x * T(0.70710678118654752440)));
}

template <class T>
inline T gelu_grad(T x) {
  T cdf = T(0.5) * (T(1) + std::erf(x * T(0.70710678118654752440)));
  T pdf = std::exp(T(-0.5) * x * x) * T(0.39894228040143267794);  // 1/sqrt(2*pi)
  return cdf + x * pdf;
}

template <class T>
void gelu_inplace(Tensor<T>& x) {
  for (auto& e : x.v) e = gelu(e);
}

// "scalar" or "avx2", for logs.
const char* backend_description();

}  // namespace subseg
