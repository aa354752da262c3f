#include "monolab/space.hpp"

#include <cmath>
#include <limits>

#include "monolab/errors.hpp"

namespace monolab {

namespace {

void require_finite(const std::vector<double>& v, const char* what) {
  for (double x : v) {
    if (!std::isfinite(x)) {
      throw InputError(std::string(what) + " has a non-finite coordinate");
    }
  }
}

void require_dim(const SpaceSpec& s, const std::vector<double>& v,
                 const char* what) {
  if (v.size() != s.dim) {
    throw InputError(std::string(what) + " has " + std::to_string(v.size()) +
                     " coordinates, expected " + std::to_string(s.dim));
  }
}

inline double sgn(double x) { return (x > 0.0) - (x < 0.0); }

// Shared body of the duality map: given coordinates and the exponent r of
// the norm they live under, produce the dual coordinates
//   y_i = |v|_r^{2-r} * |v_i|^{r-1} * sgn(v_i).
std::vector<double> duality_coords(const std::vector<double>& v, double r) {
  const double n = lr_norm(v, r);
  std::vector<double> out(v.size(), 0.0);
  if (n < 1e-300) return out;  // J(0) = 0 by convention
  const double prefactor = std::pow(n, 2.0 - r);
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double a = std::abs(v[i]);
    out[i] = (a == 0.0) ? 0.0 : prefactor * std::pow(a, r - 1.0) * sgn(v[i]);
  }
  return out;
}

}  // namespace

SpaceSpec::SpaceSpec(std::size_t dim_, double p_) : dim(dim_), p(p_) {
  if (dim == 0) throw InputError("space dimension must be at least 1");
  if (!(std::isfinite(p)) || !(p > 1.0)) {
    throw NormError("norm exponent p must lie strictly between 1 and "
                    "infinity, got p = " +
                    std::to_string(p_));
  }
  q = p / (p - 1.0);
}

std::string SpaceSpec::describe() const {
  return "R^" + std::to_string(dim) + " with l_" + std::to_string(p);
}

Point::Point(SpaceSpec s, std::vector<double> coords)
    : space(s), c(std::move(coords)) {
  require_dim(space, c, "point");
  require_finite(c, "point");
}

DualPoint::DualPoint(SpaceSpec s, std::vector<double> coords)
    : space(s), c(std::move(coords)) {
  require_dim(space, c, "dual point");
  require_finite(c, "dual point");
}

ProductPoint::ProductPoint(Point x_, DualPoint xs_)
    : x(std::move(x_)), xs(std::move(xs_)) {
  require_same_space(x.space, xs.space, "product point");
}

ProductDual::ProductDual(DualPoint g1_, Point g2_)
    : g1(std::move(g1_)), g2(std::move(g2_)) {
  require_same_space(g1.space, g2.space, "product dual");
}

void require_same_space(const SpaceSpec& a, const SpaceSpec& b,
                        const char* where) {
  if (a != b) {
    throw InputError(std::string(where) + ": mismatched spaces (" +
                     a.describe() + " vs " + b.describe() + ")");
  }
}

double lr_norm(const std::vector<double>& v, double r) {
  // Scaled accumulation keeps the sum of powers well-conditioned when the
  // coordinates span many orders of magnitude.
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  if (m == 0.0) return 0.0;
  double acc = 0.0;
  for (double x : v) acc += std::pow(std::abs(x) / m, r);
  return m * std::pow(acc, 1.0 / r);
}

double pairing(const Point& x, const DualPoint& xs) {
  require_same_space(x.space, xs.space, "pairing");
  double s = 0.0;
  for (std::size_t i = 0; i < x.c.size(); ++i) s += x.c[i] * xs.c[i];
  return s;
}

double norm(const Point& x) { return lr_norm(x.c, x.space.p); }

double norm(const DualPoint& xs) { return lr_norm(xs.c, xs.space.q); }

DualPoint duality_map(const Point& x) {
  return DualPoint(x.space, duality_coords(x.c, x.space.p));
}

Point duality_map_inverse(const DualPoint& xs) {
  // The inverse map is the duality map of the dual space (exponent q).
  return Point(xs.space, duality_coords(xs.c, xs.space.q));
}

double product_pairing(const ProductDual& g, const ProductPoint& w) {
  require_same_space(g.g1.space, w.x.space, "product pairing");
  return pairing(w.x, g.g1) + pairing(g.g2, w.xs);
}

double norm(const ProductPoint& w) {
  const double a = norm(w.x);
  const double b = norm(w.xs);
  return std::sqrt(a * a + b * b);
}

double norm(const ProductDual& g) {
  const double a = norm(g.g1);
  const double b = norm(g.g2);
  return std::sqrt(a * a + b * b);
}

ProductDual product_duality_map(const ProductPoint& w) {
  return ProductDual(duality_map(w.x), duality_map_inverse(w.xs));
}

Point add(const Point& a, const Point& b) {
  require_same_space(a.space, b.space, "add");
  std::vector<double> c(a.c.size());
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = a.c[i] + b.c[i];
  return Point(a.space, std::move(c));
}

Point sub(const Point& a, const Point& b) {
  require_same_space(a.space, b.space, "sub");
  std::vector<double> c(a.c.size());
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = a.c[i] - b.c[i];
  return Point(a.space, std::move(c));
}

Point scale(double t, const Point& a) {
  std::vector<double> c(a.c.size());
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = t * a.c[i];
  return Point(a.space, std::move(c));
}

DualPoint add(const DualPoint& a, const DualPoint& b) {
  require_same_space(a.space, b.space, "add");
  std::vector<double> c(a.c.size());
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = a.c[i] + b.c[i];
  return DualPoint(a.space, std::move(c));
}

DualPoint sub(const DualPoint& a, const DualPoint& b) {
  require_same_space(a.space, b.space, "sub");
  std::vector<double> c(a.c.size());
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = a.c[i] - b.c[i];
  return DualPoint(a.space, std::move(c));
}

DualPoint scale(double t, const DualPoint& a) {
  std::vector<double> c(a.c.size());
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = t * a.c[i];
  return DualPoint(a.space, std::move(c));
}

}  // namespace monolab
