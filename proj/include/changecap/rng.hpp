#pragma once

#include "changecap/types.hpp"

#include <cmath>
#include <cstdint>
#include <vector>

namespace changecap {

// SplitMix64: counter-based 64-bit generator. The i-th output is a fixed mix of
// seed + i*GAMMA, so streams can be split per pair / per epoch and replayed
// bit-identically on any platform.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  // Uniform in [0,1) with 53 random bits.
  Real next_real() { return static_cast<Real>(next_u64() >> 11) * 0x1.0p-53; }

  Real uniform(Real lo, Real hi) { return lo + (hi - lo) * next_real(); }

  // Box-Muller transform; consumes two draws.
  Real normal(Real mean = 0.0, Real stddev = 1.0) {
    Real u1 = next_real();
    Real u2 = next_real();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    const Real r = std::sqrt(-2.0 * std::log(u1));
    return mean + stddev * r * std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  // Unbiased integer in [0, n), n >= 1, by rejection.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return x % n;
  }

  // Derives an independent stream key from (key, index).
  static std::uint64_t split(std::uint64_t key, std::uint64_t index) {
    SplitMix64 g(key ^ (0xD1B54A32D192ED03ull + index * 0x8CB92BA72F3D8DD7ull));
    g.next_u64();
    return g.next_u64();
  }

 private:
  std::uint64_t state_;
};

// Fisher-Yates with the seeded generator; std::shuffle is not reproducible
// across standard-library implementations.
template <typename T>
void seeded_shuffle(std::vector<T>& v, SplitMix64& g) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(g.below(i));
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace changecap
