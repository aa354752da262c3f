#include "monolab/resolvent.hpp"

#include "monolab/convex.hpp"
#include "monolab/errors.hpp"
#include "monolab/fitz.hpp"
#include "monolab/rng.hpp"
#include "monolab/space.hpp"
#include "monolab/tolerances.hpp"

#include "doctest.h"

#include <cmath>
#include <string>
#include <vector>

using namespace monolab;

namespace {

const SpaceSpec kLine(1, 2.0);
const SpaceSpec kPlane(2, 2.0);

Point pt(const SpaceSpec& s, std::vector<double> c) {
  return Point(s, std::move(c));
}

DualPoint dual(const SpaceSpec& s, std::vector<double> c) {
  return DualPoint(s, std::move(c));
}

// Every solution must carry two independently computed residuals that agree.
void check_recompute(const ResolventSolution& sol) {
  const double scale =
      1.0 + std::max(std::abs(sol.residual), std::abs(sol.residual_recomputed));
  CHECK(std::abs(sol.residual - sol.residual_recomputed) <=
        Tolerances::resolvent_recompute * scale);
}

}  // namespace

TEST_CASE("the regularized solve inverts a linear gradient map") {
  const ConvexFnPtr f = make_pnorm_squared_half(kPlane);
  const ResolventSolution sol = solve_regularized(
      f, 1.0, pt(kPlane, {0, 0}), dual(kPlane, {2, 0}));
  CHECK(sol.certified);
  CHECK(sol.route == SolveRoute::Direct);
  CHECK(sol.x.c[0] == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(std::abs(sol.x.c[1]) <= 1e-9);
  CHECK(sol.residual <= Tolerances::resolvent_closed_form);
  check_recompute(sol);
}

TEST_CASE("the regularized solve soft-thresholds through a kink") {
  const ConvexFnPtr f = make_abs_sum(kLine);

  const ResolventSolution past = solve_regularized(
      f, 1.0, pt(kLine, {0}), dual(kLine, {2}));
  CHECK(past.certified);
  CHECK(past.x.c[0] == doctest::Approx(1.0).epsilon(1e-9));
  check_recompute(past);

  const ResolventSolution absorbed = solve_regularized(
      f, 1.0, pt(kLine, {0}), dual(kLine, {0.5}));
  CHECK(absorbed.certified);
  CHECK(std::abs(absorbed.x.c[0]) <= 1e-9);
  CHECK(absorbed.xs_sel.c[0] == doctest::Approx(0.5).epsilon(1e-9));
  check_recompute(absorbed);
}

TEST_CASE("solving the scaled problem equals solving the shifted operator at "
          "weight one") {
  // target in J(x) + lambda*df(x) is the same inclusion as
  // 0 in J(x) + d(lambda*f - <., target>)(x).
  struct Case {
    ConvexFnPtr f;
    double lambda;
    std::vector<double> target;
  };
  const std::vector<Case> cases = {
      {make_abs_sum(kLine), 2.0, {3.0}},
      {make_pnorm_squared_half(kLine), 0.5, {-1.25}},
  };
  for (const auto& c : cases) {
    const Point zero = pt(kLine, {0});
    const ResolventSolution direct = solve_regularized(
        c.f, c.lambda, zero, dual(kLine, c.target));

    const ConvexFnPtr shifted = combine_sum(
        make_scaled(c.lambda, c.f),
        make_affine(kLine, {-c.target[0]}, 0.0));
    const ResolventSolution unit =
        solve_regularized(shifted, 1.0, zero, dual(kLine, {0.0}));

    CHECK(direct.certified);
    CHECK(unit.certified);
    CHECK(std::abs(direct.x.c[0] - unit.x.c[0]) <=
          Tolerances::scaling_coherence);
  }
}

TEST_CASE("a starved budget comes back flagged instead of thrown") {
  const SpaceSpec cubic(2, 3.0);  // p != 2 forces the iterative routes
  SolveControls controls;
  controls.budget = 3;
  const ResolventSolution sol = solve_regularized(
      make_abs_sum(cubic), 1.0, pt(cubic, {0, 0}), dual(cubic, {2, 0.4}),
      0.0, controls);
  CHECK_FALSE(sol.certified);
  CHECK(sol.note.find("budget") != std::string::npos);
  CHECK(std::isfinite(sol.residual));
  check_recompute(sol);
}

TEST_CASE("points of the graph pass the quantitative maximality test") {
  const ConvexFnPtr f = make_pnorm_squared_half(kLine);
  const MaximalityTestResult res = maximality_extension_test(
      f, 1.0, pt(kLine, {1}), dual(kLine, {1}), {0.1, 0.01});
  CHECK(res.related);
  CHECK(res.bounds_ok);
  REQUIRE(res.distances.size() == 2);
  const std::vector<double> eps = {0.1, 0.01};
  for (std::size_t i = 0; i < eps.size(); ++i) {
    CHECK(res.distances[i].first <= eps[i] + Tolerances::rate_law_slack);
    CHECK(res.distances[i].second <=
          2.0 * eps[i] / 1.0 + Tolerances::rate_law_slack);
  }
}

TEST_CASE("the approach distances obey the rate law along a finer schedule") {
  const ConvexFnPtr f = make_pnorm_squared_half(kLine);
  const std::vector<double> schedule = {1e-1, 1e-2, 1e-3};
  const MaximalityTestResult res = maximality_extension_test(
      f, 1.0, pt(kLine, {0.7}), dual(kLine, {0.7}), schedule);
  CHECK(res.related);
  CHECK(res.bounds_ok);
  REQUIRE(res.distances.size() == schedule.size());
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    CHECK(res.distances[i].first <= schedule[i] + Tolerances::rate_law_slack);
  }
}

TEST_CASE("unrelated points short-circuit the maximality test") {
  const ConvexFnPtr f = make_abs_sum(kLine);
  const MaximalityTestResult res = maximality_extension_test(
      f, 1.0, pt(kLine, {0}), dual(kLine, {2}), {0.1, 0.01});
  CHECK_FALSE(res.related);
  CHECK(res.gap_estimate < 0.0);
  CHECK(res.distances.empty());
  CHECK_FALSE(res.bounds_ok);
}

TEST_CASE("boundary subgradients still pass the maximality test") {
  const ConvexFnPtr f = make_abs_sum(kLine);
  const MaximalityTestResult res = maximality_extension_test(
      f, 1.0, pt(kLine, {0}), dual(kLine, {1}), {0.1, 0.01});
  CHECK(res.related);
  CHECK(res.bounds_ok);
}

TEST_CASE("malformed epsilon schedules are rejected") {
  const ConvexFnPtr f = make_abs_sum(kLine);
  const Point z = pt(kLine, {0});
  const DualPoint zs = dual(kLine, {0});
  CHECK_THROWS_AS(
      maximality_extension_test(f, 1.0, z, zs, {0.1, 0.2}), InputError);
  CHECK_THROWS_AS(
      maximality_extension_test(f, 1.0, z, zs, {-0.1}), InputError);
  CHECK_THROWS_AS(maximality_extension_test(f, 1.0, z, zs, {}), InputError);
  CHECK_THROWS_AS(
      solve_regularized(f, -1.0, z, zs), InputError);
}

TEST_CASE("the surjectivity probe solves subdifferential operators by "
          "regularization") {
  const OperatorRepr a = OperatorRepr::subdiff_of(make_abs_sum(kLine));
  const MintyReport report = minty_probe(
      a, 1.0, {dual(kLine, {-2}), dual(kLine, {0}), dual(kLine, {2})});
  REQUIRE(report.entries.size() == 3);
  CHECK(report.all_within_tol);
  const std::vector<double> expected = {-1.0, 0.0, 1.0};
  for (std::size_t k = 0; k < 3; ++k) {
    const MintyEntry& e = report.entries[k];
    CHECK(e.route == "regularized");
    CHECK(e.certified);
    REQUIRE(e.x.has_value());
    CHECK(std::abs(e.x->c[0] - expected[k]) <= 1e-6);
    CHECK(e.residual <= report.tol);
  }
}

TEST_CASE("the surjectivity probe inverts linear operators directly") {
  Eigen::MatrixXd m(2, 2);
  m << 2, 1, 1, 3;
  const OperatorRepr a = OperatorRepr::psd_linear(kPlane, m);
  const DualPoint target = dual(kPlane, {1.0, -2.0});
  const MintyReport report = minty_probe(a, 1.0, {target});
  REQUIRE(report.entries.size() == 1);
  const MintyEntry& e = report.entries[0];
  CHECK(e.route == "linear-solve");
  CHECK(e.certified);
  CHECK(e.residual <= 1e-10);

  // Independent 2x2 solve of (I + M) x = target.
  Eigen::Matrix2d a22;
  a22 << 3, 1, 1, 4;
  Eigen::Vector2d rhs(1.0, -2.0);
  const Eigen::Vector2d x = a22.colPivHouseholderQr().solve(rhs);
  REQUIRE(e.x.has_value());
  CHECK(std::abs(e.x->c[0] - x(0)) <= 1e-10);
  CHECK(std::abs(e.x->c[1] - x(1)) <= 1e-10);
}

TEST_CASE("a residual bounded away from zero exposes a non-surjective graph") {
  const OperatorGraph g(kLine, {{pt(kLine, {0}), dual(kLine, {0})}});
  const OperatorRepr a = OperatorRepr::finite_graph(g);
  const MintyReport report = minty_probe(a, 1.0, {dual(kLine, {5})});
  REQUIRE(report.entries.size() == 1);
  CHECK(report.entries[0].route == "graph-search");
  CHECK(report.entries[0].residual >= 4.0 - 1e-9);
  CHECK(report.entries[0].residual == doctest::Approx(5.0).epsilon(1e-12));
  CHECK_FALSE(report.all_within_tol);
}

TEST_CASE("the product-space route recovers the direct resolvent of the "
          "identity") {
  const OperatorRepr identity =
      OperatorRepr::psd_linear(kPlane, Eigen::MatrixXd::Identity(2, 2));
  const ResolventSolution sol =
      rockafellar_solve(identity, 1.0, dual(kPlane, {2, 0}));
  CHECK(sol.route == SolveRoute::ProductSpace);
  CHECK(sol.certified);
  CHECK(sol.x.c[0] == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(std::abs(sol.x.c[1]) <= 1e-7);
  CHECK(sol.xs_sel.c[0] == doctest::Approx(1.0).epsilon(1e-7));
  REQUIRE(sol.direct_agreement.has_value());
  CHECK(*sol.direct_agreement <= 1e-6);
  check_recompute(sol);

  const ResolventSolution at_zero =
      rockafellar_solve(identity, 1.0, dual(kPlane, {0, 0}));
  CHECK(norm(at_zero.x) <= 1e-8);
}

TEST_CASE("the product-space route agrees with the linear solve on random "
          "operators") {
  Rng rng(606);
  for (int trial = 0; trial < 5; ++trial) {
    const std::size_t d = 2 + static_cast<std::size_t>(rng.uniform_int(0, 4));
    const SpaceSpec s(d, 2.0);
    Eigen::MatrixXd a(d, d);
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = 0; j < d; ++j) a(i, j) = rng.normal();
    }
    Eigen::MatrixXd m = a.transpose() * a / static_cast<double>(d) +
                        0.3 * Eigen::MatrixXd::Identity(d, d);
    const OperatorRepr op = OperatorRepr::psd_linear(s, m);
    for (double lambda : {0.5, 1.0, 2.0}) {
      const DualPoint zs = dual(s, rng.cube(d, 2.0));
      const ResolventSolution sol = rockafellar_solve(op, lambda, zs);
      REQUIRE(sol.direct_agreement.has_value());
      CHECK(*sol.direct_agreement <= 1e-6);
      check_recompute(sol);
    }
  }
}

TEST_CASE("the product-space route reports finite graphs honestly") {
  const OperatorGraph g(kLine, {{pt(kLine, {0}), dual(kLine, {0})},
                                {pt(kLine, {1}), dual(kLine, {1})}});
  const OperatorRepr a = OperatorRepr::finite_graph(g);
  const ResolventSolution sol = rockafellar_solve(a, 1.0, dual(kLine, {2}));
  CHECK(sol.route == SolveRoute::ProductSpace);
  CHECK(sol.note.find("not maximal") != std::string::npos);
  CHECK(std::isfinite(sol.residual));
  check_recompute(sol);
}

TEST_CASE("the product-space route rejects unsupported inputs") {
  const SpaceSpec cubic(1, 3.0);
  const OperatorRepr wrong_exponent =
      OperatorRepr::psd_linear(cubic, Eigen::MatrixXd::Identity(1, 1));
  CHECK_THROWS_AS(rockafellar_solve(wrong_exponent, 1.0, dual(cubic, {1})),
                  UnsupportedError);

  const OperatorRepr subgrad = OperatorRepr::subdiff_of(make_abs_sum(kLine));
  CHECK_THROWS_AS(rockafellar_solve(subgrad, 1.0, dual(kLine, {1})),
                  UnsupportedError);

  const OperatorRepr singular =
      OperatorRepr::psd_linear(kLine, Eigen::MatrixXd::Zero(1, 1));
  CHECK_THROWS_AS(rockafellar_solve(singular, 1.0, dual(kLine, {1})),
                  UnsupportedError);
}

TEST_CASE("residuals stay small across random targets and weights") {
  const ConvexFnPtr f = make_abs_sum(kPlane);
  Rng rng(707);
  for (double lambda : {0.5, 1.0, 2.0}) {
    for (int k = 0; k < 10; ++k) {
      const DualPoint target = dual(kPlane, rng.cube(2, 3.0));
      const ResolventSolution sol =
          solve_regularized(f, lambda, pt(kPlane, {0, 0}), target);
      CHECK(sol.certified);
      CHECK(sol.residual <= Tolerances::resolvent_iterative);
      check_recompute(sol);
    }
  }
}
