#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

namespace glyco::rng {

// Deterministic pseudo-random streams, specified tightly enough that another
// implementation (any language, IEEE-754 doubles) reproduces them bit for bit.
//
// Two generators are used:
//   * SplitMix64 for data generation (synthetic cohorts, weight init).
//   * Lcg64 (MMIX multiplier) for the per-epoch training shuffle.
// Derivations, draw order, and the uniform/normal mappings are part of the
// on-disk reproducibility contract; see README "Random streams".

// SplitMix64 output function (Steele, Lea, Flood 2014).
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Independent substream seed: mix64(seed + GOLDEN * (salt + 1)).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t salt) {
  return mix64(seed + 0x9E3779B97F4A7C15ULL * (salt + 1));
}

class SplitMix64 {
public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    state_ += 0x9E3779B97F4A7C15ULL;
    return mix64(state_);
  }

  // Uniform in [0, 1) from the top 53 bits.
  double u01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + u01() * (hi - lo); }

  // Standard normal via Box-Muller; consumes exactly two raw draws per call.
  double normal() {
    double u1 = u01();
    double u2 = u01();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  // Unbiased-enough bounded draw (Lemire multiply-shift); n > 0.
  std::uint64_t bounded(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next()) * n) >> 64);
  }

private:
  std::uint64_t state_;
};

// 64-bit LCG, state' = state * 6364136223846793005 + 1442695040888963407,
// output is the new state. Used only for shuffling training-example order.
class Lcg64 {
public:
  explicit Lcg64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    state_ = state_ * 6364136223846793005ULL + 1442695040888963407ULL;
    return state_;
  }

  std::uint64_t bounded(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next()) * n) >> 64);
  }

private:
  std::uint64_t state_;
};

// Fisher-Yates, descending index, swap target drawn as bounded(i + 1).
template <typename T, typename Rng>
void shuffle(std::vector<T>& items, Rng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(rng.bounded(i));
    std::swap(items[i - 1], items[j]);
  }
}

} // namespace glyco::rng
