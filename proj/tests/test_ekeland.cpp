#include "monolab/ekeland.hpp"

#include "monolab/convex.hpp"
#include "monolab/errors.hpp"
#include "monolab/space.hpp"
#include "monolab/tolerances.hpp"

#include "doctest.h"

#include <cmath>
#include <string>
#include <vector>

using namespace monolab;

namespace {

const SpaceSpec kLine(1, 2.0);

Point pt(double v) { return Point(kLine, {v}); }
DualPoint dual(double v) { return DualPoint(kLine, {v}); }

EvpControls seeded(std::uint64_t seed) {
  EvpControls c;
  c.seed = seed;
  return c;
}

}  // namespace

TEST_CASE("an approximate minimizer of the parabola lands near zero") {
  const ConvexFnPtr f = make_pnorm_squared_half(kLine);
  const double eps = 0.1;
  const EkelandCertificate cert = evp_solve(f, eps, pt(1.0), seeded(101));
  CHECK(cert.eps == eps);
  // Value gap at most eps^2 pins |x| <= sqrt(2 * eps^2).
  CHECK(cert.gap_1a <= eps * eps + Tolerances::ekeland_gap);
  CHECK(std::abs(cert.x_eps.c[0]) <= std::sqrt(2.0) * eps + 1e-6);
  CHECK(cert.objective_value ==
        doctest::Approx(f->eval(cert.x_eps).value()).epsilon(1e-12));
  CHECK(cert.perturbed_check.violations == 0);
}

TEST_CASE("an approximate minimizer of the absolute value has a tiny value") {
  const ConvexFnPtr f = make_abs_sum(kLine);
  const EkelandCertificate cert = evp_solve(f, 0.05, pt(0.7), seeded(102));
  CHECK(f->eval(cert.x_eps).value() <= 0.0025 + Tolerances::ekeland_gap);
  CHECK(cert.perturbed_check.violations == 0);
}

TEST_CASE("functions unbounded below are refused with a divergence error") {
  const ConvexFnPtr f = make_affine(kLine, {1.0}, 0.0);
  CHECK_THROWS_AS(evp_solve(f, 0.1, pt(0.0), seeded(103)), DivergenceError);
}

TEST_CASE("verification re-derives both inequalities and catches tampering") {
  const ConvexFnPtr f = make_pnorm_squared_half(kLine);
  const EkelandCertificate cert = evp_solve(f, 0.1, pt(1.0), seeded(104));
  CHECK(evp_verify(cert, f).pass());

  EkelandCertificate forged = cert;
  forged.x_eps = pt(cert.x_eps.c[0] + 1.0);
  // Extra probe points make the strongest violation reproducible.
  const EvpVerifyReport report =
      evp_verify(forged, f, {pt(0.0), pt(0.1), pt(-0.1)});
  CHECK_FALSE(report.pass());
  CHECK(report.max_violation > 0.0);
  REQUIRE(report.worst_witness.has_value());
  // The inequality breaks where the true minimum lives, near the origin.
  CHECK(std::abs(report.worst_witness->c[0]) <= 0.25);
}

TEST_CASE("constant functions certify with zero gap") {
  const ConvexFnPtr f = make_affine(kLine, {0.0}, 5.0);
  const EkelandCertificate cert = evp_solve(f, 0.1, pt(2.0), seeded(105));
  CHECK(cert.gap_1a == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(cert.objective_value == doctest::Approx(5.0).epsilon(1e-12));
  CHECK(evp_verify(cert, f).pass());
}

TEST_CASE("stationarity split vanishes at an exact minimizer") {
  // Objective 0.5*|x - 0|^2 + 1*(0.5 x^2 - <x, 0>) is minimized exactly
  // at 0; every piece of the split is 0 there.
  const ConvexFnPtr f = make_pnorm_squared_half(kLine);
  const Point z = pt(0.0);
  const DualPoint zs = dual(0.0);
  const ConvexFnPtr psi = build_psi(f, z, zs, 1.0);
  const EkelandCertificate cert = evp_solve(psi, 0.01, pt(0.5), seeded(106));
  const StationarityDecomposition dec =
      stationarity_decompose(f, z, zs, 1.0, cert);
  CHECK(std::abs(dec.x_eps.c[0]) <= 1e-6);
  CHECK(std::abs(dec.xs_eps.c[0]) <= 1e-6);
  CHECK(std::abs(dec.ys_eps.c[0]) <= 1e-6);
  CHECK(norm(dec.us_eps) <= 1.0 + Tolerances::unit_ball_slack);
  CHECK(dec.residual <= Tolerances::stationarity_residual);
  CHECK_FALSE(dec.decomposition_failure);
}

TEST_CASE("stationarity split absorbs a boundary target into the kink") {
  // 2 * 0.5 = target inside the subdifferential of |x| at 0: the selected
  // subgradient soaks up the whole dual target and the unit term vanishes.
  const ConvexFnPtr f = make_abs_sum(kLine);
  const Point z = pt(0.0);
  const DualPoint zs = dual(0.5);
  const ConvexFnPtr psi = build_psi(f, z, zs, 1.0);
  const EkelandCertificate cert = evp_solve(psi, 0.01, pt(0.3), seeded(107));
  const StationarityDecomposition dec =
      stationarity_decompose(f, z, zs, 1.0, cert);
  CHECK(std::abs(dec.x_eps.c[0]) <= 1e-6);
  CHECK(dec.xs_eps.c[0] == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(std::abs(dec.ys_eps.c[0]) <= 1e-6);
  CHECK(norm(dec.us_eps) <= 1.0 + Tolerances::unit_ball_slack);
  CHECK(dec.residual <= Tolerances::stationarity_residual);
  CHECK_FALSE(dec.decomposition_failure);
}

TEST_CASE("a sloppy minimizer is flagged as a decomposition failure") {
  // Hand-build a certificate whose point is far from the minimizer while
  // eps is tiny: the unit-ball element would need a huge norm, which the
  // split reports instead of hiding.
  const ConvexFnPtr f = make_pnorm_squared_half(kLine);
  EkelandCertificate bogus;
  bogus.x_eps = pt(1.0);
  bogus.eps = 1e-6;
  const StationarityDecomposition dec =
      stationarity_decompose(f, pt(0.0), dual(0.0), 1.0, bogus);
  CHECK(dec.decomposition_failure);
  CHECK(norm(dec.us_eps) <= 1.0 + Tolerances::unit_ball_slack);
  CHECK(dec.note.find("inner") != std::string::npos);
}

TEST_CASE("the family of approximate minimizers stays inside the coercivity "
          "radius") {
  const ConvexFnPtr f = make_pnorm_squared_half(kLine);
  const Point z = pt(0.3);
  const DualPoint zs = dual(-0.4);
  const ConvexFnPtr psi = build_psi(f, z, zs, 1.0);
  const Point start = pt(2.0);

  const auto view = as_psi(*psi);
  REQUIRE(view.has_value());
  const double level = psi->eval(start).value();
  const double radius = psi_coercivity_radius(*view, level);
  CHECK(std::isfinite(radius));
  CHECK(radius > 0.0);

  for (double eps : {1.0, 0.5, 0.1, 0.01}) {
    const EkelandCertificate cert = evp_solve(psi, eps, start, seeded(108));
    CHECK(norm(cert.x_eps) <= radius + 1e-9);
  }
}

TEST_CASE("a starved budget surfaces the best certificate so far") {
  // p = 3 plus a max-affine term leaves only the slow subgradient route, so
  // two iterations cannot certify a 1e-9 minimizer.
  const SpaceSpec plane(2, 3.0);
  const ConvexFnPtr f = combine_sum(
      make_pnorm_squared_half(plane),
      make_max_affine(plane, {{1.0, 0.3}, {-0.7, 1.0}, {0.2, -1.0}},
                      {0.0, 0.1, 0.0}));
  EvpControls controls = seeded(109);
  controls.budget = 2;
  try {
    evp_solve(f, 1e-9, Point(plane, {2.0, -1.5}), controls);
    FAIL("expected the budget to run out");
  } catch (const EvpBudgetError& e) {
    CHECK(std::isfinite(e.best().objective_value));
    CHECK(e.best().x_eps.c.size() == 2);
    CHECK(e.best().route == "subgradient");
  }
}
