#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace pedloc {

// Mixes (seed, index) into an independent stream seed. Used to derive
// per-sample / per-pass streams so parallel and serial runs agree.
uint64_t split_seed(uint64_t seed, uint64_t index);

// Deterministic random source. All distributions are implemented on top of
// the raw 64-bit engine output so that sequences are identical across
// platforms and standard-library versions.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in (0, 1); never returns an exact endpoint.
  double uniform_open() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller (cosine branch; two uniforms per draw).
  double normal() {
    const double u1 = uniform_open();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
  }

  double normal(double mean, double std) { return mean + std * normal(); }

  // Laplace(mu, b) via inverse CDF.
  double laplace(double mu, double b) {
    const double u = uniform_open() - 0.5;
    const double sgn = (u > 0.0) ? 1.0 : (u < 0.0 ? -1.0 : 0.0);
    return mu - b * sgn * std::log(1.0 - 2.0 * std::abs(u));
  }

  bool bernoulli(double p) { return uniform() < p; }

  // Fisher-Yates index for shuffling: uniform integer in [0, n).
  uint64_t below(uint64_t n) {
    // Rejection sampling to avoid modulo bias.
    const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return x % n;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace pedloc
