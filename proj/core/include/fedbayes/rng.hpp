#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <vector>

namespace fedbayes {

// splitmix64; used to derive independent per-component streams from one seed.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Deterministic generator. std::shuffle, std::normal_distribution and
// std::discrete_distribution are implementation-defined, so every draw that
// influences results goes through the explicit routines below; a fixed seed
// then yields bit-identical runs on any platform.
class Generator {
 public:
  explicit Generator(std::uint64_t seed) : seed_(seed), engine_(splitmix64(seed)) {}

  // Independent stream keyed on (this generator's seed, id).
  Generator child(std::uint64_t id) const {
    return Generator(seed_ ^ splitmix64(id + 0x51ed2701allu));
  }

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Standard normal via Box-Muller; second value of each pair is cached.
  double normal() {
    if (have_cached_) {
      have_cached_ = false;
      return cached_;
    }
    // u1 in (0, 1] so the log is finite.
    const double u1 = (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * M_PI * u2;
    cached_ = r * std::sin(theta);
    have_cached_ = true;
    return r * std::cos(theta);
  }

  void normal_fill(std::span<double> out) {
    for (double& v : out) v = normal();
  }

  std::vector<double> normal_vector(std::size_t n) {
    std::vector<double> out(n);
    normal_fill(out);
    return out;
  }

  // Unbiased draw from {0, ..., n-1} by rejection.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x = engine_();
    while (x >= limit) x = engine_();
    return x % n;
  }

  // Fisher-Yates.
  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[below(i)]);
    }
  }

  // Categorical draw proportional to weights (need not be normalised).
  // Weights must be nonnegative with a positive sum.
  std::size_t categorical(std::span<const double> weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    const double u = uniform() * total;
    double cum = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      cum += weights[i];
      if (u < cum) return i;
    }
    // Round-off fallthrough: last index with positive weight.
    for (std::size_t i = weights.size(); i > 0; --i) {
      if (weights[i - 1] > 0.0) return i - 1;
    }
    return weights.size() - 1;
  }

 private:
  std::uint64_t seed_ = 0;
  std::mt19937_64 engine_;
  bool have_cached_ = false;
  double cached_ = 0.0;
};

}  // namespace fedbayes
