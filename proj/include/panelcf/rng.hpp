#pragma once

#include <cmath>
#include <cstdint>

namespace panelcf {

// Counter-friendly 64-bit generator (SplitMix-style finalizer). Every Monte
// Carlo consumer derives an independent stream per sample index, so results
// do not depend on how samples are sliced across threads.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  // Decorrelated stream for sample `index` under a run-level seed.
  static Rng stream(std::uint64_t seed, std::uint64_t index) {
    Rng r(mix(seed ^ mix(index + 0x9E3779B97F4A7C15ULL)));
    r.next();
    return r;
  }

  std::uint64_t next() {
    state_ += 0x9E3779B97F4A7C15ULL;
    return mix(state_);
  }

  // Uniform draw on [0, 1) with 53-bit resolution.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Uniform integer on [0, n).
  std::uint64_t below(std::uint64_t n) { return next() % n; }

  // Standard normal via Box-Muller; pairs are cached per stream.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform(), u2 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * 3.141592653589793238462643383279502884 * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  // ±1 with equal probability.
  double sign() { return (next() & 1u) ? 1.0 : -1.0; }

private:
  static std::uint64_t mix(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ULL;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBULL;
    z ^= z >> 31;
    return z;
  }

  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

} // namespace panelcf
