#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace gse {

// splitmix64; used to turn (seed, index) pairs into independent stream seeds.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Deterministic random stream. All draws go through our own transforms so
// output bytes do not depend on the standard library's distribution
// implementations.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  // Stream for work item `index` under a top-level seed; identical results
  // regardless of which worker processes the item.
  static RandomStream derived(std::uint64_t seed, std::uint64_t index) {
    return RandomStream(splitmix64(seed) ^ splitmix64(0x517cc1b727220a95ULL + index));
  }

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1).
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform in (0, 1]; safe to feed into log().
  double uniform01_open() { return (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  double exponential() { return -std::log(uniform01_open()); }

  // Symmetric Dirichlet(1) draw of length n via normalized exponentials.
  std::vector<double> dirichlet1(int n) {
    std::vector<double> v(static_cast<std::size_t>(n));
    double sum = 0.0;
    for (auto& x : v) {
      x = exponential();
      sum += x;
    }
    for (auto& x : v) x /= sum;
    return v;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace gse
