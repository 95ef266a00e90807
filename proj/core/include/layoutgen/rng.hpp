#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace layoutgen {

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// mt19937_64 with self-contained sampling helpers so draws do not depend on
// standard-library distribution implementations.
struct Rng {
  std::mt19937_64 gen;

  explicit Rng(uint64_t seed = 0) : gen(seed) {}

  // Independent stream for a parallel work item.
  static Rng stream(uint64_t master_seed, uint64_t index) {
    return Rng(splitmix64(master_seed ^ splitmix64(index + 1)));
  }

  uint64_t next() { return gen(); }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(gen() >> 11) * 0x1.0p-53; }

  // Uniform integer in [lo, hi] inclusive.
  int64_t uniform_int(int64_t lo, int64_t hi) {
    uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
    return lo + static_cast<int64_t>(gen() % span);
  }

  bool bernoulli(double p) { return uniform() < p; }

  // Index sampled proportionally to non-negative weights (at least one > 0).
  size_t choice_weighted(const std::vector<double>& weights) {
    double total = 0;
    for (double w : weights) total += w;
    double r = uniform() * total;
    for (size_t i = 0; i < weights.size(); ++i) {
      r -= weights[i];
      if (r < 0) return i;
    }
    return weights.size() - 1;
  }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i)
      std::swap(v[i - 1], v[static_cast<size_t>(uniform_int(0, static_cast<int64_t>(i) - 1))]);
  }
};

}  // namespace layoutgen
