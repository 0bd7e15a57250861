#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>

namespace faeq {

namespace detail {

// splitmix64 step; used only to whiten seed material.
inline uint64_t splitmix64(uint64_t& state) {
  uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

}  // namespace detail

/// Derives an independent stream seed from a master seed and up to two
/// stream indices (e.g. SNR point and trial number).
inline uint64_t derive_seed(uint64_t master, uint64_t stream_a = 0, uint64_t stream_b = 0) {
  uint64_t s = master;
  uint64_t h = detail::splitmix64(s);
  s ^= stream_a + 0x632be59bd9b4e019ull;
  h ^= detail::splitmix64(s);
  s ^= stream_b + 0xd1b54a32d192ed03ull;
  h ^= detail::splitmix64(s);
  return h;
}

// Deterministic random source. The engine is std::mt19937_64 (its output is
// fixed by the standard); uniform/normal draws are hand-rolled so results do
// not depend on the standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t next_u64() { return engine_(); }

  // uniform in [0, 1), 53-bit resolution
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // uniform integer in [0, n)
  uint64_t uniform_int(uint64_t n) { return engine_() % n; }

  // standard normal via Box-Muller, pairs cached
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    double u2 = uniform();
    while (u1 == 0.0) u1 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double t = 2.0 * M_PI * u2;
    spare_ = r * std::sin(t);
    has_spare_ = true;
    return r * std::cos(t);
  }

  // circularly-symmetric complex Gaussian with the given total variance
  std::complex<double> complex_normal(double variance) {
    const double s = std::sqrt(variance / 2.0);
    const double re = normal();
    const double im = normal();
    return {s * re, s * im};
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace faeq
