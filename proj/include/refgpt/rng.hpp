#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

#include "refgpt/common.hpp"

namespace refgpt {

// SplitMix64 (Steele, Lea, Flood 2014). Fixed algorithm so that identical
// seeds reproduce identical streams on every platform; std::mt19937 and
// friends are deliberately not used anywhere in the pipeline.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1), 53-bit resolution.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform integer in [0, bound], inclusive. Modulo bias is below 2^-50 for
  // the bounds used here (word positions, pool sizes).
  std::uint64_t next_below(std::uint64_t bound_inclusive) {
    return next_u64() % (bound_inclusive + 1);
  }

  // One Box-Muller draw; consumes exactly two uniforms per call.
  double gaussian(double mu, double sigma) {
    double u1 = 1.0 - next_double();  // (0, 1]
    double u2 = next_double();
    double r = std::sqrt(-2.0 * std::log(u1));
    return mu + sigma * r * std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  // Weighted index over `weights`; total weight must be positive.
  std::size_t weighted_index(const std::vector<double>& weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    if (total <= 0.0) throw ConfigError("weighted sampling requires a positive total weight");
    double r = next_double() * total;
    double acc = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      acc += weights[i];
      if (r < acc) return i;
    }
    return weights.size() - 1;
  }

 private:
  std::uint64_t state_;
};

// Per-record stream derivation: record i draws from an independent stream
// seeded by mixing the global seed with the record index. Same formula
// everywhere, documented here once.
inline std::uint64_t derive_seed(std::uint64_t global_seed, std::uint64_t index) {
  Rng mixer(global_seed ^ (0x9E3779B97F4A7C15ULL * (index + 1)));
  return mixer.next_u64();
}

}  // namespace refgpt
