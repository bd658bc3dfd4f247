#pragma once

#include <cmath>
#include <cstdint>

namespace hlsm {

// Seeded splitmix64 generator with hand-rolled distributions.
// Produces identical sequences on every platform/stdlib, which keeps
// seeded episode traces byte-reproducible.
class Rng {
 public:
  explicit Rng(uint64_t seed = 0) : state_(seed) {}

  uint64_t next_u64() {
    uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  // Uniform integer in [0, n), n >= 1. Rejection sampling, no modulo bias.
  uint64_t next_below(uint64_t n) {
    const uint64_t limit = ~uint64_t{0} - (~uint64_t{0} % n);
    uint64_t v = next_u64();
    while (v >= limit) v = next_u64();
    return v % n;
  }

  // Uniform double in [0, 1).
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return next_double() < p; }

  // Box-Muller, two draws per call (no cached spare, so the stream position
  // is a pure function of the call count).
  double gaussian(double mean, double stddev) {
    double u1 = next_double();
    double u2 = next_double();
    if (u1 < 1e-300) u1 = 1e-300;
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * 3.14159265358979323846 * u2;
    return mean + stddev * r * std::cos(theta);
  }

  // Derives an independent stream (for e.g. sensor noise vs. policy sampling).
  Rng split(uint64_t tag) const {
    Rng r(state_ ^ (0xA5A5A5A55A5A5A5Aull + tag));
    r.next_u64();
    return r;
  }

 private:
  uint64_t state_;
};

}  // namespace hlsm
