#pragma once

#include <cstddef>
#include <initializer_list>
#include <vector>

namespace subseg {

// Dense row-major tensor. Rank is dynamic but almost everything here is 2-D
// (sequence x feature) or 1-D (bias / gain vectors).
template <class T>
struct Tensor {
  std::vector<size_t> shape;
  std::vector<T> v;

  Tensor() = default;
  explicit Tensor(std::vector<size_t> sh) : shape(std::move(sh)) {
    size_t n = 1;
    for (size_t d : shape) n *= d;
    v.assign(n, T(0));
  }
  Tensor(std::initializer_list<size_t> sh) : Tensor(std::vector<size_t>(sh)) {}

  static Tensor zeros(std::initializer_list<size_t> sh) { return Tensor(sh); }

  size_t numel() const { return v.size(); }
  bool empty() const { return v.empty(); }
  size_t rows() const { return shape.empty() ? 0 : shape[0]; }
  size_t cols() const { return shape.size() < 2 ? (shape.empty() ? 0 : 1) : shape[1]; }

  T* data() { return v.data(); }
  const T* data() const { return v.data(); }
  T* row(size_t r) { return v.data() + r * cols(); }
  const T* row(size_t r) const { return v.data() + r * cols(); }
  T& at(size_t r, size_t c) { return v[r * cols() + c]; }
  const T& at(size_t r, size_t c) const { return v[r * cols() + c]; }

  void zero() { std::fill(v.begin(), v.end(), T(0)); }
  void fill(T x) { std::fill(v.begin(), v.end(), x); }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }

  template <class U>
  Tensor<U> cast() const {
    Tensor<U> out;
    out.shape = shape;
    out.v.resize(v.size());
    for (size_t i = 0; i < v.size(); ++i) out.v[i] = static_cast<U>(v[i]);
    return out;
  }
};

}  // namespace subseg
