#ifndef LEGNN_RNG_HPP
#define LEGNN_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "legnn/errors.hpp"

namespace legnn {

// Deterministic random source. All distribution mappings are implemented
// here instead of <random>'s distribution classes, whose output is
// implementation-defined; results must be identical across platforms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Unbiased draw from [0, n).
  std::size_t uniform_index(std::size_t n) {
    if (n == 0) throw ContractError("uniform_index: n must be positive");
    const std::uint64_t span = static_cast<std::uint64_t>(n);
    // rejection keeps the draw exactly uniform
    std::uint64_t x, r;
    do {
      x = gen_();
      r = x % span;
    } while (x - r > std::uint64_t(-1) - (span - 1));
    return static_cast<std::size_t>(r);
  }

  // [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller; pairs cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * 3.14159265358979323846 * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  // In-place Fisher-Yates.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[uniform_index(i)]);
    }
  }

  // splitmix64 finalizer; used to derive independent streams.
  static std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
    std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace legnn

#endif  // LEGNN_RNG_HPP
