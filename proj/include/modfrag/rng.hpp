#pragma once

#include <cstdint>

namespace modfrag {

/// SplitMix64 finalizer (Steele, Lea & Flood 2014).
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Seed of the independent stream for (master seed, trial, edge). Every
/// random draw in the library comes from a stream keyed this way, so results
/// depend only on these indices and never on scheduling.
constexpr std::uint64_t stream_key(std::uint64_t master, std::uint64_t trial, std::uint64_t edge) {
  return mix64(mix64(master ^ 0x6D6F646672616731ULL) + mix64(trial + 0x9E3779B97F4A7C15ULL) * 3 +
               mix64(edge ^ 0xD1B54A32D192ED03ULL));
}

/// SplitMix64 generator: state advances by the golden gamma, output is
/// mix64(state).
class SplitMix64 {
 public:
  explicit constexpr SplitMix64(std::uint64_t seed) : state_(seed) {}

  constexpr std::uint64_t next() {
    state_ += 0x9E3779B97F4A7C15ULL;
    return mix64(state_);
  }
  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  /// Uniform in (0, 1).
  double uniform_open() { return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53; }
  /// Standard normal via Box-Muller (one value per call).
  double normal();
  /// Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound);

 private:
  std::uint64_t state_;
};

/// Binomial(n, p). Inversion by geometric waiting times when
/// min(p, 1-p) * n < 10, otherwise Hormann's BTRS transformed rejection.
std::int64_t sample_binomial(SplitMix64& rng, std::int64_t n, double p);

/// Poisson(mean). Multiplication method when mean < 10, otherwise Hormann's
/// PTRS transformed rejection.
std::int64_t sample_poisson(SplitMix64& rng, double mean);

}  // namespace modfrag
