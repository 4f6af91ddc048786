// rng.hpp : deterministic random and quasi-random sources.
// All stochastic choices in the library flow through SplitMix64 so that a
// fixed seed reproduces every draw bit-for-bit on any platform.

#pragma once

#include <cstdint>
#include <vector>

namespace sympnf {

class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // uniform in [0,1)
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // uniform in [lo,hi)
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // uniform in [-1,1)
  double symmetric() { return uniform(-1.0, 1.0); }

 private:
  std::uint64_t state_;
};

// Halton low-discrepancy sequence (1-based index), one value per call.
inline double halton(std::uint64_t index, std::uint64_t base) {
  double f = 1.0, r = 0.0;
  while (index > 0) {
    f /= static_cast<double>(base);
    r += f * static_cast<double>(index % base);
    index /= base;
  }
  return r;
}

// First `count` Halton points in a box, one coordinate stream per axis.
inline std::vector<std::vector<double>> halton_box(
    std::size_t count, const std::vector<double>& lo,
    const std::vector<double>& hi) {
  static const std::uint64_t primes[] = {2, 3, 5, 7, 11, 13, 17, 19};
  std::vector<std::vector<double>> pts;
  pts.reserve(count);
  for (std::size_t i = 1; i <= count; ++i) {
    std::vector<double> p(lo.size());
    for (std::size_t a = 0; a < lo.size(); ++a)
      p[a] = lo[a] + (hi[a] - lo[a]) * halton(i, primes[a % 8]);
    pts.push_back(std::move(p));
  }
  return pts;
}

}  // namespace sympnf
