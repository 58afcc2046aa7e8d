#pragma once

#include <cstddef>

namespace subseg::kern {

// Arithmetic kernels behind the tensor math. Every entry has a scalar
// reference implementation and, on x86-64, an AVX2+FMA variant; the active
// table is picked once at startup from CPUID (override: SUBSEG_ISA=scalar
// or force_isa() in tests). Variants are equivalence-tested against the
// scalar reference, not guaranteed bit-identical (FMA changes rounding).
template <class T>
struct Backend {
  T (*dot)(const T* a, const T* b, size_t n);
  void (*axpy)(T alpha, const T* x, T* y, size_t n);  // y += alpha * x
  void (*scale)(T* x, size_t n, T alpha);             // x *= alpha
  void (*vadd)(const T* x, T* y, size_t n);           // y += x
  T (*reduce_max)(const T* x, size_t n);              // n >= 1
  T (*reduce_sum)(const T* x, size_t n);

  // Row-major matrix products, all accumulating into c.
  // c[m x n] += a[m x k] * b[k x n]
  void (*matmul_nn)(const T* a, const T* b, T* c, size_t m, size_t k, size_t n);
  // c[m x n] += a[m x k] * b[n x k]^T
  void (*matmul_nt)(const T* a, const T* b, T* c, size_t m, size_t k, size_t n);
  // c[k x n] += a[m x k]^T * b[m x n]
  void (*matmul_tn)(const T* a, const T* b, T* c, size_t m, size_t k, size_t n);
};

enum class Isa { Scalar, Avx2 };

const char* isa_name(Isa isa);
bool avx2_supported();  // compiled in and reported by the CPU
Isa active_isa();
void force_isa(Isa isa);  // throws if the requested variant is unavailable

template <class T>
const Backend<T>& backend();

// Direct access for equivalence tests.
template <class T>
const Backend<T>& scalar_backend();
#if defined(SUBSEG_HAVE_AVX2)
template <class T>
const Backend<T>& avx2_backend();
#endif

}  // namespace subseg::kern
