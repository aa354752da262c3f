#include "monolab/rng.hpp"

#include <cmath>

namespace monolab {

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  // Box-Muller on two fresh uniforms; u1 is kept away from 0 so the log is
  // finite.
  double u1 = 0.0;
  do {
    u1 = unit();
  } while (u1 <= 0.0);
  const double u2 = unit();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * 3.14159265358979323846 * u2;
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

std::int64_t Rng::uniform_int(std::int64_t lo, std::int64_t hi) {
  const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
  const std::uint64_t limit = std::uint64_t(-1) - std::uint64_t(-1) % span;
  std::uint64_t v = 0;
  do {
    v = eng_();
  } while (v >= limit);
  return lo + static_cast<std::int64_t>(v % span);
}

std::vector<double> Rng::cube(std::size_t dim, double radius) {
  std::vector<double> out(dim);
  for (auto& c : out) c = uniform(-radius, radius);
  return out;
}

std::vector<double> Rng::gaussian(std::size_t dim) {
  std::vector<double> out(dim);
  for (auto& c : out) c = normal();
  return out;
}

}  // namespace monolab
