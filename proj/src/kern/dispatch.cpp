#include <atomic>
#include <cstdlib>
#include <cstring>
#include <stdexcept>

#include "subseg/kern/kernels.hpp"

namespace subseg::kern {

namespace {

Isa detect() {
#if defined(SUBSEG_HAVE_AVX2)
  const char* env = std::getenv("SUBSEG_ISA");
  if (env && std::strcmp(env, "scalar") == 0) return Isa::Scalar;
  if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) return Isa::Avx2;
#endif
  return Isa::Scalar;
}

std::atomic<Isa> g_isa{detect()};

}  // namespace

const char* isa_name(Isa isa) { return isa == Isa::Avx2 ? "avx2" : "scalar"; }

bool avx2_supported() {
#if defined(SUBSEG_HAVE_AVX2)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Isa active_isa() { return g_isa.load(std::memory_order_relaxed); }

void force_isa(Isa isa) {
  if (isa == Isa::Avx2 && !avx2_supported())
    throw std::runtime_error("AVX2 kernels unavailable on this machine/build");
  g_isa.store(isa, std::memory_order_relaxed);
}

template <class T>
const Backend<T>& backend() {
#if defined(SUBSEG_HAVE_AVX2)
  if (active_isa() == Isa::Avx2) return avx2_backend<T>();
#endif
  return scalar_backend<T>();
}

template const Backend<float>& backend<float>();
template const Backend<double>& backend<double>();

}  // namespace subseg::kern
