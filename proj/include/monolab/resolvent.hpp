#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "monolab/convex.hpp"
#include "monolab/fitz.hpp"
#include "monolab/space.hpp"

namespace monolab {

enum class SolveRoute { Direct, ProductSpace };

// Solution of the resolvent-type inclusion
//   target  in  J(x - z) + lambda * A(x)
// together with the selected operator value and two independently computed
// copies of the residual |target - J(x-z) - lambda*xs_sel|_q.
struct ResolventSolution {
  Point x;
  DualPoint xs_sel;
  double residual = 0.0;
  double residual_recomputed = 0.0;
  double lambda = 0.0;
  DualPoint target;
  SolveRoute route = SolveRoute::Direct;
  bool certified = false;
  int iterations = 0;
  // Distance to an independent closed-form solution, when one exists
  // (product-space route cross-checked against the direct linear solve).
  std::optional<double> direct_agreement;
  std::string note;
};

struct SolveControls {
  int budget = 400000;
  std::uint64_t seed = 0x7e501;
};

// Solves target in J(x - z) + lambda*subdiff(f)(x) by minimizing the
// regularized objective.  With z = 0 this realizes membership of `target`
// in the range of J + lambda*subdiff(f).  tol <= 0 picks the default for
// the route that ran: 1e-8 when a closed-form/Newton-grade path solved the
// problem, 1e-6 for first-order iterative paths.  Budget exhaustion is not
// an error: the best point comes back flagged non-certified.
ResolventSolution solve_regularized(const ConvexFnPtr& f, double lambda,
                                    const Point& z, const DualPoint& target,
                                    double tol = 0.0,
                                    const SolveControls& controls = {});

// Quantitative maximality evidence for (z, zs) against subdiff(f): monotone
// relatedness (sampled gap), then for each eps a certified approximate
// minimizer of the regularized objective and its stationarity split,
// recording the distances (|x_eps - z|, |xs_eps - zs|) against the bounds
// (eps, 2 eps / lambda).
struct MaximalityTestResult {
  bool related = false;
  double gap_estimate = 0.0;
  bool gap_exact = false;
  std::vector<double> eps_schedule;
  // One entry per eps: (primal distance, dual distance).
  std::vector<std::pair<double, double>> distances;
  bool bounds_ok = false;
  double tol = 0.0;
};

MaximalityTestResult maximality_extension_test(
    const ConvexFnPtr& f, double lambda, const Point& z, const DualPoint& zs,
    const std::vector<double>& eps_schedule, double tol = 1e-6,
    const SolveControls& controls = {});

// One target of a surjectivity probe: solve target in J(x) + lambda*A(x).
struct MintyEntry {
  DualPoint target;
  std::optional<Point> x;
  std::optional<DualPoint> xs_sel;
  double residual = 0.0;
  bool certified = false;
  std::string route;
};

struct MintyReport {
  std::vector<MintyEntry> entries;
  double max_residual = 0.0;
  bool all_within_tol = false;
  double tol = 0.0;
};

// Per-variant strategy: SubdiffOf solves the regularized problem, PsdLinear
// at p=2 is a direct linear solve, FiniteGraph searches its pairs for the
// best residual (large residuals are non-surjectivity evidence).
MintyReport minty_probe(const OperatorRepr& a, double lambda,
                        const std::vector<DualPoint>& targets,
                        double tol = 1e-6,
                        const SolveControls& controls = {});

// Product-space route: shifts the operator to lambda*A - zs, builds its
// Fitzpatrick representation, and minimizes
//   G(w) = 1/2 |w|^2 + H(w)
// over product points w = (x, x*); the minimizer recovers x with
// zs in J(x) + lambda*A(x).  Requires p = 2 and a PsdLinear (positive
// definite) or FiniteGraph operator.  PsdLinear solutions carry the
// distance to the direct solve (I + lambda*M)^{-1} zs in direct_agreement.
ResolventSolution rockafellar_solve(const OperatorRepr& a, double lambda,
                                    const DualPoint& zs, double tol = 1e-8,
                                    const SolveControls& controls = {});

}  // namespace monolab
