#include "monolab/space.hpp"

#include "monolab/errors.hpp"
#include "monolab/rng.hpp"
#include "monolab/tolerances.hpp"

#include "doctest.h"

#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

using namespace monolab;

namespace {

constexpr double kInvSqrt2 = 0.70710678118653824;  // 2^(-1/2) within 1e-15

Point pt(const SpaceSpec& s, std::vector<double> c) {
  return Point(s, std::move(c));
}

DualPoint dual(const SpaceSpec& s, std::vector<double> c) {
  return DualPoint(s, std::move(c));
}

// Central difference of 0.5*|x|_p^2 along coordinate i.
double half_norm_sq_fd(const Point& x, std::size_t i, double h) {
  Point hi = x;
  Point lo = x;
  hi.c[i] += h;
  lo.c[i] -= h;
  const double fhi = 0.5 * norm(hi) * norm(hi);
  const double flo = 0.5 * norm(lo) * norm(lo);
  return (fhi - flo) / (2.0 * h);
}

}  // namespace

TEST_CASE("pairing contracts a point against a dual point coordinatewise") {
  const SpaceSpec s(2, 2.0);
  CHECK(pairing(pt(s, {1, 2}), dual(s, {3, 4})) == 11.0);
  CHECK(pairing(pt(s, {1, 0}), dual(s, {0, 1})) == 0.0);
}

TEST_CASE("norms follow the space exponent and its dual exponent") {
  const SpaceSpec euclid(2, 2.0);
  CHECK(norm(pt(euclid, {3, 4})) == doctest::Approx(5.0).epsilon(1e-15));

  const SpaceSpec quartic(2, 4.0);
  CHECK(quartic.q == doctest::Approx(4.0 / 3.0).epsilon(1e-15));
  CHECK(norm(pt(quartic, {1, 1})) ==
        doctest::Approx(std::pow(2.0, 0.25)).epsilon(1e-15));
  // Dual vectors carry the conjugate exponent; a unit coordinate vector has
  // unit norm for every exponent.
  CHECK(norm(dual(quartic, {1, 0})) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("duality map is the identity at p = 2 and maps zero to zero") {
  const SpaceSpec s(3, 2.0);
  const Point x = pt(s, {0.5, -2.0, 3.25});
  const DualPoint jx = duality_map(x);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(jx.c[i] == doctest::Approx(x.c[i]).epsilon(1e-15));
  }

  const DualPoint j0 = duality_map(pt(s, {0, 0, 0}));
  for (double c : j0.c) CHECK(c == 0.0);
}

TEST_CASE("duality map matches the hand value at p = 4") {
  const SpaceSpec s(2, 4.0);
  const DualPoint jx = duality_map(pt(s, {1, 1}));
  CHECK(jx.c[0] == doctest::Approx(kInvSqrt2).epsilon(1e-14));
  CHECK(jx.c[1] == doctest::Approx(kInvSqrt2).epsilon(1e-14));
}

TEST_CASE("duality map in one dimension is the identity for every exponent") {
  for (double p : {1.5, 2.0, 3.0, 4.0}) {
    const SpaceSpec s(1, p);
    for (double v : {-2.0, -0.25, 0.75, 3.0}) {
      CHECK(duality_map(pt(s, {v})).c[0] == doctest::Approx(v).epsilon(1e-12));
    }
  }
}

TEST_CASE("inverse duality map undoes the duality map on seeded samples") {
  Rng rng(41);
  for (double p : {1.5, 2.0, 3.0, 4.0}) {
    for (std::size_t d : {std::size_t{1}, std::size_t{2}, std::size_t{5}}) {
      const SpaceSpec s(d, p);
      for (int k = 0; k < 50; ++k) {
        const Point x = pt(s, rng.cube(d, 4.0));
        const Point back = duality_map_inverse(duality_map(x));
        double err = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
          err = std::max(err, std::abs(back.c[i] - x.c[i]));
        }
        CHECK(err <= Tolerances::duality_roundtrip * (1.0 + norm(x)));
      }
    }
  }
}

TEST_CASE("product duality map acts componentwise with swapped slots") {
  const SpaceSpec s(2, 4.0);
  const Point x = pt(s, {1, 1});
  const DualPoint xs = dual(s, {kInvSqrt2, kInvSqrt2});
  const ProductDual g = product_duality_map(ProductPoint(x, xs));
  // g1 = J(x), g2 = J^{-1}(x*): for this pair the two images swap the inputs.
  CHECK(g.g1.c[0] == doctest::Approx(kInvSqrt2).epsilon(1e-12));
  CHECK(g.g1.c[1] == doctest::Approx(kInvSqrt2).epsilon(1e-12));
  CHECK(g.g2.c[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(g.g2.c[1] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("duality map satisfies its defining identities on seeded samples") {
  for (double p : {1.5, 2.0, 3.0, 4.0}) {
    for (std::size_t d : {std::size_t{1}, std::size_t{2}, std::size_t{5},
                          std::size_t{20}}) {
      const SpaceSpec s(d, p);
      Rng rng(1000 + d + static_cast<std::uint64_t>(p * 16));
      for (int k = 0; k < 100; ++k) {
        const Point x = pt(s, rng.cube(d, 4.0));
        const DualPoint jx = duality_map(x);
        const double nx = norm(x);
        CHECK(std::abs(pairing(x, jx) - nx * nx) <=
              Tolerances::duality_identity * (1.0 + nx * nx));
        CHECK(std::abs(norm(jx) - nx) <=
              Tolerances::duality_identity * (1.0 + nx));
      }
    }
  }
}

TEST_CASE("duality map is odd") {
  const SpaceSpec s(3, 3.0);
  Rng rng(7);
  for (int k = 0; k < 100; ++k) {
    const Point x = pt(s, rng.cube(3, 2.0));
    const DualPoint a = duality_map(x);
    const DualPoint b = duality_map(scale(-1.0, x));
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(std::abs(a.c[i] + b.c[i]) <= Tolerances::duality_odd);
    }
  }
}

TEST_CASE("duality map is the gradient of half the squared norm") {
  // Coordinates are kept away from the axes: for p < 2 the map's coordinate
  // derivative blows up at zero crossings and the difference quotient with
  // it.
  Rng rng(99);
  for (double p : {1.5, 2.0, 3.0, 4.0}) {
    const SpaceSpec s(3, p);
    for (int k = 0; k < 10; ++k) {
      std::vector<double> c = rng.cube(3, 2.0);
      for (double& v : c) v += (v >= 0.0 ? 0.3 : -0.3);
      const Point x = pt(s, c);
      const DualPoint jx = duality_map(x);
      for (std::size_t i = 0; i < 3; ++i) {
        const double fd = half_norm_sq_fd(x, i, 1e-6);
        CHECK(std::abs(fd - jx.c[i]) <=
              Tolerances::duality_fd * (1.0 + std::abs(jx.c[i])));
      }
    }
  }
}

TEST_CASE("norm exponents outside the open interval (1, inf) are rejected") {
  CHECK_THROWS_AS(SpaceSpec(2, 1.0), NormError);
  CHECK_THROWS_AS(SpaceSpec(2, 0.5), NormError);
  CHECK_THROWS_AS(SpaceSpec(2, -3.0), NormError);
  CHECK_THROWS_AS(SpaceSpec(2, std::numeric_limits<double>::infinity()),
                  NormError);
  CHECK_THROWS_AS(SpaceSpec(0, 2.0), InputError);
}

TEST_CASE("vanishing inputs map to zero exactly instead of overflowing") {
  const SpaceSpec s(2, 1.5);
  const DualPoint jx = duality_map(pt(s, {1e-301, -1e-308}));
  CHECK(jx.c[0] == 0.0);
  CHECK(jx.c[1] == 0.0);
}

TEST_CASE("operations across mismatched spaces are rejected") {
  const SpaceSpec a(2, 2.0);
  const SpaceSpec b(2, 3.0);
  CHECK_THROWS_AS(pairing(pt(a, {1, 2}), dual(b, {3, 4})), InputError);
  CHECK_THROWS_AS(add(pt(a, {1, 2}), pt(SpaceSpec(3, 2.0), {1, 2, 3})),
                  InputError);
}
