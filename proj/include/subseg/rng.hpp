#pragma once

#include <cmath>
#include <cstdint>

namespace subseg {

// SplitMix64 (Steele, Lea, Flood 2014). Chosen because its output is fixed by
// the algorithm alone, so seeded runs reproduce bit-exactly on every platform.
// One state word, trivially splittable into per-item streams via derive().
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next_u64() {
    uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1), 53 random bits.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in [0, n). Multiply-shift range reduction; bias is < n / 2^64.
  uint64_t next_below(uint64_t n) {
    return static_cast<uint64_t>((static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  // Standard normal via Box-Muller. Draws two uniforms per call (no caching,
  // so the draw count per sample is fixed).
  double next_gaussian() {
    double u1 = next_double();
    double u2 = next_double();
    while (u1 <= 0.0) u1 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  // Uniform in [lo, hi).
  double next_uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  // Avalanche finalizer used to derive independent per-item seeds.
  static uint64_t mix(uint64_t x) {
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
  }

  // Seed for stream `index` derived from a master seed. Used wherever
  // per-sentence / per-resample determinism must hold under parallelism.
  static uint64_t derive(uint64_t seed, uint64_t index) {
    return mix(seed ^ mix(index + 0x9E3779B97F4A7C15ULL));
  }

  // FNV-1a; fixed algorithm so string-keyed seeding is portable.
  static uint64_t hash_str(const char* s, size_t n) {
    uint64_t h = 0xCBF29CE484222325ULL;
    for (size_t i = 0; i < n; ++i) {
      h ^= static_cast<unsigned char>(s[i]);
      h *= 0x100000001B3ULL;
    }
    return h;
  }

 private:
  uint64_t state_;
};

}  // namespace subseg
