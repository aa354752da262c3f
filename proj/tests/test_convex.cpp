#include "monolab/convex.hpp"

#include "monolab/errors.hpp"
#include "monolab/rng.hpp"
#include "monolab/space.hpp"
#include "monolab/tolerances.hpp"

#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

using namespace monolab;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Point pt(const SpaceSpec& s, std::vector<double> c) {
  return Point(s, std::move(c));
}

DualPoint dual(const SpaceSpec& s, std::vector<double> c) {
  return DualPoint(s, std::move(c));
}

Eigen::MatrixXd mat1(double v) {
  Eigen::MatrixXd m(1, 1);
  m(0, 0) = v;
  return m;
}

SamplePlan plan(std::uint64_t seed, int count = 600, double radius = 4.0) {
  return SamplePlan{seed, count, radius};
}

// Sorted first coordinates of a generator list, for order-free comparisons.
std::vector<double> sorted_coord0(const std::vector<DualPoint>& gens) {
  std::vector<double> out;
  out.reserve(gens.size());
  for (const auto& g : gens) out.push_back(g.c[0]);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST_CASE("indicator box is zero inside and infinite outside its box") {
  const SpaceSpec s(1, 2.0);
  const ConvexFnPtr box = make_indicator_box(s, {0.0}, {1.0});
  CHECK_FALSE(box->eval(pt(s, {2.0})).finite());
  CHECK(box->eval(pt(s, {0.5})).finite());
  CHECK(box->eval(pt(s, {0.5})).value() == 0.0);
  CHECK(box->eval(pt(s, {1.0})).value() == 0.0);
}

TEST_CASE("half squared p-norm evaluates in the space norm") {
  const SpaceSpec euclid(2, 2.0);
  const ConvexFnPtr f = make_pnorm_squared_half(euclid);
  CHECK(f->eval(pt(euclid, {3, 4})).value() ==
        doctest::Approx(12.5).epsilon(1e-15));

  const SpaceSpec quartic(2, 4.0);
  const ConvexFnPtr g = make_pnorm_squared_half(quartic);
  // |(1,1)|_4^2 = sqrt(2).
  CHECK(g->eval(pt(quartic, {1, 1})).value() ==
        doctest::Approx(0.5 * std::sqrt(2.0)).epsilon(1e-14));
}

TEST_CASE("trapezoid discretization approximates the running-cost integral") {
  // inner r^2 along x(t) = t on [0, 1]: the integral is 1/3.
  const SpaceSpec inner_space(1, 2.0);
  const ConvexFnPtr inner = make_quadratic(inner_space, mat1(2.0));
  const int nodes = 1000;
  const ConvexFnPtr phi = build_integral_functional(inner, nodes, 1.0);
  REQUIRE(phi->space().dim == static_cast<std::size_t>(nodes));

  std::vector<double> traj(nodes);
  for (int i = 0; i < nodes; ++i) traj[i] = static_cast<double>(i) / (nodes - 1);
  CHECK(phi->eval(pt(phi->space(), traj)).value() ==
        doctest::Approx(1.0 / 3.0).epsilon(1e-5));
}

TEST_CASE("trapezoid rule is exact for constants and respects inner domains") {
  const SpaceSpec inner_space(1, 2.0);
  const ConvexFnPtr inner = make_quadratic(inner_space, mat1(2.0));
  for (int nodes : {2, 5, 17}) {
    const ConvexFnPtr phi = build_integral_functional(inner, nodes, 1.0);
    const std::vector<double> traj(nodes, 0.75);
    CHECK(phi->eval(pt(phi->space(), traj)).value() ==
          doctest::Approx(0.75 * 0.75).epsilon(1e-14));
  }

  // One node value outside the inner domain poisons the whole trajectory.
  const ConvexFnPtr box = make_indicator_box(inner_space, {0.0}, {1.0});
  const ConvexFnPtr phi = build_integral_functional(box, 4, 1.0);
  CHECK_FALSE(phi->eval(pt(phi->space(), {0.5, 0.5, 2.0, 0.5})).finite());
  CHECK(phi->eval(pt(phi->space(), {0.5, 0.5, 1.0, 0.5})).finite());
}

TEST_CASE("kinks give polytope subdifferentials, smooth points singletons") {
  const SpaceSpec d1(1, 2.0);
  const ConvexFnPtr abs = make_abs_sum(d1);
  const SubdiffRepr at_kink = subdiff(*abs, pt(d1, {0.0}));
  REQUIRE(at_kink.variant == SubdiffRepr::Variant::Polytope);
  const std::vector<double> gens = sorted_coord0(at_kink.generators);
  REQUIRE(gens.size() == 2);
  CHECK(gens[0] == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(gens[1] == doctest::Approx(1.0).epsilon(1e-15));

  const SpaceSpec d2(2, 2.0);
  Eigen::MatrixXd m(2, 2);
  m << 2, 0, 0, 1;
  const ConvexFnPtr quad = make_quadratic(d2, m);
  const SubdiffRepr smooth = subdiff(*quad, pt(d2, {1.0, -3.0}));
  REQUIRE(smooth.variant == SubdiffRepr::Variant::Singleton);
  CHECK(smooth.generators[0].c[0] == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(smooth.generators[0].c[1] == doctest::Approx(-3.0).epsilon(1e-15));

  // max(x_1, x_2) at the tie point: hull of both active slopes.
  const ConvexFnPtr ma =
      make_max_affine(d2, {{1.0, 0.0}, {0.0, 1.0}}, {0.0, 0.0});
  const SubdiffRepr tie = subdiff(*ma, pt(d2, {1.0, 1.0}));
  REQUIRE(tie.variant == SubdiffRepr::Variant::Polytope);
  REQUIRE(tie.generators.size() == 2);
  std::vector<std::vector<double>> got;
  for (const auto& g : tie.generators) got.push_back(g.c);
  std::sort(got.begin(), got.end());
  CHECK(got[0] == std::vector<double>{0.0, 1.0});
  CHECK(got[1] == std::vector<double>{1.0, 0.0});
}

TEST_CASE("subdifferential membership accepts members and refutes with a "
          "witness") {
  const SpaceSpec d1(1, 2.0);
  const ConvexFnPtr abs = make_abs_sum(d1);

  const MembershipResult in =
      subdiff_membership(*abs, pt(d1, {0.0}), dual(d1, {0.5}), plan(11));
  CHECK(in.holds);
  CHECK(in.exact);

  const MembershipResult out =
      subdiff_membership(*abs, pt(d1, {0.0}), dual(d1, {2.0}), plan(12));
  CHECK_FALSE(out.holds);
  CHECK(out.exact);
  REQUIRE(out.witness.has_value());
  // The witness y certifies |0| + <y - 0, 2> > |y|.
  const double y = out.witness->c[0];
  CHECK(2.0 * y - std::abs(y) > 0.0);
  CHECK(out.violation == doctest::Approx(2.0 * y - std::abs(y)).epsilon(1e-12));

  const SpaceSpec d2(2, 2.0);
  const ConvexFnPtr half = make_pnorm_squared_half(d2);
  const Point x = pt(d2, {0.8, -1.7});
  const MembershipResult grad =
      subdiff_membership(*half, x, dual(d2, {0.8, -1.7}), plan(13));
  CHECK(grad.holds);
}

TEST_CASE("sum rule: normal cone of a half line plus an affine slope") {
  const SpaceSpec d1(1, 2.0);
  const ConvexFnPtr f = combine_sum(make_indicator_box(d1, {0.0}, {kInf}),
                                    make_affine(d1, {1.0}, 0.0));
  const Point origin = pt(d1, {0.0});
  // The subdifferential at 0 is (-inf, 1].
  for (double xs : {-5.0, 0.0, 1.0}) {
    CHECK(subdiff_membership(*f, origin, dual(d1, {xs}), plan(21)).holds);
  }
  const MembershipResult beyond =
      subdiff_membership(*f, origin, dual(d1, {1.5}), plan(22));
  CHECK_FALSE(beyond.holds);
  CHECK(beyond.exact);

  // Materializing the unbounded side cuts the cone at a large radius and
  // says so.
  const SubdiffRepr repr = subdiff(*f, origin);
  CHECK(repr.variant == SubdiffRepr::Variant::Polytope);
  CHECK(repr.truncated);
}

TEST_CASE("sum of a kink and a smooth quadratic widens the singleton") {
  const SpaceSpec d1(1, 2.0);
  const ConvexFnPtr f =
      combine_sum(make_abs_sum(d1), make_pnorm_squared_half(d1));
  const Point origin = pt(d1, {0.0});
  // subdiff at 0 is [-1, 1]: interior, boundary, and outside.
  CHECK(subdiff_membership(*f, origin, dual(d1, {0.5}), plan(31)).holds);
  CHECK(subdiff_membership(*f, origin, dual(d1, {1.0}), plan(32)).holds);
  CHECK_FALSE(subdiff_membership(*f, origin, dual(d1, {1.5}), plan(33)).holds);

  // Two smooth pieces fold into a singleton: d/dx (x^2/2 + x^2/2) = 2x.
  const ConvexFnPtr two =
      combine_sum(make_pnorm_squared_half(d1), make_pnorm_squared_half(d1));
  const SubdiffRepr repr = subdiff(*two, pt(d1, {1.5}));
  REQUIRE(repr.variant == SubdiffRepr::Variant::Singleton);
  CHECK(repr.generators[0].c[0] == doctest::Approx(3.0).epsilon(1e-14));
}

TEST_CASE("regularized objective assembles proximity, function, and tilt") {
  const SpaceSpec d2(2, 2.0);
  const Point zero2 = pt(d2, {0.0, 0.0});

  // f == 0: the objective 0.5*|x|^2 - <x, v> is minimized exactly at v.
  const DualPoint v = dual(d2, {0.3, -0.7});
  const ConvexFnPtr flat = build_psi(make_zero(d2), zero2, v, 1.0);
  const Point vpt = pt(d2, {0.3, -0.7});
  const double at_v = flat->eval(vpt).value();
  CHECK(at_v == doctest::Approx(-0.5 * (0.3 * 0.3 + 0.7 * 0.7)).epsilon(1e-14));
  Rng rng(55);
  for (int k = 0; k < 20; ++k) {
    const Point other = pt(d2, rng.cube(2, 3.0));
    CHECK(flat->eval(other).value() >= at_v - 1e-12);
  }

  // f = 0.5*|x|^2 with weight 3 and no tilt: 0.5*|x|^2 + 3*0.5*|x|^2.
  const ConvexFnPtr steep =
      build_psi(make_pnorm_squared_half(d2), zero2, dual(d2, {0.0, 0.0}), 3.0);
  for (int k = 0; k < 10; ++k) {
    const Point x = pt(d2, rng.cube(2, 2.0));
    const double n2 = x.c[0] * x.c[0] + x.c[1] * x.c[1];
    CHECK(steep->eval(x).value() == doctest::Approx(2.0 * n2).epsilon(1e-12));
  }

  const SpaceSpec d1(1, 2.0);
  const ConvexFnPtr psi =
      build_psi(make_abs_sum(d1), pt(d1, {1.0}), dual(d1, {2.0}), 1.0);
  CHECK(psi->eval(pt(d1, {0.0})).value() ==
        doctest::Approx(0.5).epsilon(1e-14));

  // The pieces are recoverable through the view.
  const auto view = as_psi(*psi);
  REQUIRE(view.has_value());
  CHECK(view->lambda == 1.0);
  CHECK(view->z.c[0] == 1.0);
  CHECK(view->zs.c[0] == 2.0);
  CHECK_FALSE(as_psi(*make_abs_sum(d1)).has_value());

  CHECK_THROWS_AS(
      build_psi(make_abs_sum(d1), pt(d1, {0.0}), dual(d1, {0.0}), 0.0),
      InputError);
}

TEST_CASE("subgradient selections are monotone across seeded pairs") {
  struct Case {
    const char* name;
    ConvexFnPtr f;
  };
  const SpaceSpec d3(3, 3.0);
  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(3, 3) * 1.5;
  const std::vector<Case> cases = {
      {"abs sum, p = 3", make_abs_sum(d3)},
      {"quadratic, p = 3", make_quadratic(d3, m)},
  };
  for (const auto& c : cases) {
    CAPTURE(c.name);
    Rng rng(2024);
    for (int k = 0; k < 300; ++k) {
      const Point x = pt(d3, rng.cube(3, 3.0));
      const Point y = pt(d3, rng.cube(3, 3.0));
      const DualPoint gx = c.f->subgradient(x);
      const DualPoint gy = c.f->subgradient(y);
      const double inner = pairing(sub(x, y), sub(gx, gy));
      const double scale = 1.0 + norm(sub(x, y)) * norm(sub(gx, gy));
      CHECK(inner >= -Tolerances::monotonicity * scale);
    }
  }
}

TEST_CASE("subgradients pass their own membership test") {
  const SpaceSpec d2(2, 2.0);
  Eigen::MatrixXd m(2, 2);
  m << 2, 1, 1, 3;
  const std::vector<ConvexFnPtr> catalog = {
      make_abs_sum(d2),
      make_quadratic(d2, m),
      make_max_affine(d2, {{1, 0}, {0, 1}, {-1, -1}}, {0, 0.5, 0}),
      make_indicator_box(d2, {-1, -1}, {1, 1}),
      make_indicator_ball(d2, 2.0),
      make_affine(d2, {0.25, -0.5}, 1.0),
  };
  Rng rng(77);
  for (const auto& f : catalog) {
    CAPTURE(fn_kind_name(f->kind()));
    for (int k = 0; k < 25; ++k) {
      std::vector<double> c = rng.cube(2, 0.9);  // inside box and ball domains
      const Point x = pt(d2, c);
      const DualPoint g = f->subgradient(x);
      CHECK(subdiff_membership(*f, x, g, plan(400 + k)).holds);
    }
  }
}

TEST_CASE("regularized objective is coercive along rays") {
  const SpaceSpec d1(1, 2.0);
  const ConvexFnPtr psi =
      build_psi(make_abs_sum(d1), pt(d1, {0.0}), dual(d1, {2.0}), 1.0);
  double prev = -kInf;
  for (double t : {10.0, 100.0, 1000.0}) {
    const double value = psi->eval(pt(d1, {-t})).value();
    CHECK(value > prev);
    prev = value;
  }
  CHECK(prev > 1e5);
}

TEST_CASE("convexity spot check reports no violation on the catalog") {
  const SpaceSpec d2(2, 3.0);
  const std::vector<ConvexFnPtr> catalog = {
      make_abs_sum(d2),
      make_pnorm_squared_half(d2),
      make_max_affine(d2, {{1, 2}, {-1, 0}}, {0, 1}),
  };
  for (const auto& f : catalog) {
    CHECK(convexity_check(*f, 9001, 50, 3.0) <= Tolerances::convexity);
  }
}

TEST_CASE("conjugates expose the Fenchel duals where closed forms exist") {
  const SpaceSpec d2(2, 2.0);
  const ConvexFnPtr half = make_pnorm_squared_half(d2);
  const auto c = half->conjugate(dual(d2, {1.0, 2.0}));
  REQUIRE(c.has_value());
  CHECK(c->value() == doctest::Approx(2.5).epsilon(1e-14));

  const ConvexFnPtr abs = make_abs_sum(d2);
  const auto inside = abs->conjugate(dual(d2, {0.5, -1.0}));
  REQUIRE(inside.has_value());
  CHECK(inside->value() == 0.0);
  const auto outside = abs->conjugate(dual(d2, {2.0, 0.0}));
  REQUIRE(outside.has_value());
  CHECK_FALSE(outside->finite());
}

TEST_CASE("improper sums and malformed constructors are rejected") {
  const SpaceSpec d1(1, 2.0);
  CHECK_THROWS_AS(make_sum({make_indicator_box(d1, {0.0}, {1.0}),
                            make_indicator_box(d1, {2.0}, {3.0})}),
                  InputError);
  CHECK_THROWS_AS(make_indicator_box(d1, {1.0}, {0.0}), InputError);
  CHECK_THROWS_AS(make_indicator_ball(d1, -1.0), InputError);
  CHECK_THROWS_AS(make_scaled(0.0, make_abs_sum(d1)), InputError);
  CHECK_THROWS_AS(build_integral_functional(make_abs_sum(d1), 1, 1.0),
                  InputError);
  CHECK_THROWS_AS(build_integral_functional(make_abs_sum(d1), 4, 0.0),
                  InputError);

  const SpaceSpec d2(2, 2.0);
  Eigen::MatrixXd asym(2, 2);
  asym << 1, 2, 0, 1;
  CHECK_THROWS_AS(make_quadratic(d2, asym), InputError);
  Eigen::MatrixXd negdef(2, 2);
  negdef << -1, 0, 0, -1;
  CHECK_THROWS_AS(make_quadratic(d2, negdef), InputError);
}

TEST_CASE("subdifferential of the empty domain point is empty") {
  const SpaceSpec d1(1, 2.0);
  const ConvexFnPtr box = make_indicator_box(d1, {0.0}, {1.0});
  const SubdiffStructure outside = box->subdiff_structure(pt(d1, {2.0}));
  CHECK(outside.is_empty());
  CHECK_THROWS_AS(box->subgradient(pt(d1, {2.0})), InputError);
}
