#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace monolab {

// Deterministic random source.  std::mt19937_64 has a portable, fully
// specified sequence; the distributions below are hand-written because the
// std:: distribution adapters are implementation-defined and would break
// bit-for-bit reproducibility across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  // Uniform in [0, 1) with 53 random bits.
  double unit() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }

  // Standard normal via Box-Muller; the spare variate is cached.
  double normal();

  // Uniform integer in [lo, hi] by rejection (unbiased).
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

  // Vector with i.i.d. uniform coordinates in [-radius, radius].
  std::vector<double> cube(std::size_t dim, double radius);

  // Vector with i.i.d. standard normal coordinates.
  std::vector<double> gaussian(std::size_t dim);

  std::uint64_t raw() { return eng_(); }

 private:
  std::mt19937_64 eng_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// A reproducible sampling recipe: `count` points drawn from the cube of the
// given radius (optionally recentred by the caller), all derived from `seed`.
struct SamplePlan {
  std::uint64_t seed = 0;
  int count = 0;
  double radius = 0.0;
};

}  // namespace monolab
