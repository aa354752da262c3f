#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "monolab/convex.hpp"
#include "monolab/errors.hpp"
#include "monolab/inner_solve.hpp"

namespace monolab {

// Where the declared infimum of a certificate comes from: an exact catalog
// closed form, or merely the best value seen during the solve (weaker).
enum class InfProvenance { ClosedForm, BestFound };

struct InfReference {
  double value = 0.0;
  InfProvenance provenance = InfProvenance::BestFound;
};

// Result of checking the perturbed-minimality inequality
//   f(x_eps) <= f(x) + eps * |x - x_eps|
// over a seeded sample plan.
struct PerturbedCheck {
  SamplePlan plan;
  double max_violation = 0.0;  // positive = inequality broken at the witness
  int violations = 0;
  std::optional<Point> worst_witness;
};

// Certified eps-minimizer: the point together with the evidence that both
// the value gap and the sampled perturbed-minimality inequality hold.
struct EkelandCertificate {
  Point x_eps;
  double eps = 0.0;
  double objective_value = 0.0;
  InfReference inf_reference;
  double gap_1a = 0.0;  // objective_value - inf_reference.value
  PerturbedCheck perturbed_check;
  // Solver provenance (useful in reports; not part of the certificate math).
  std::string route;
  int iterations = 0;
};

struct EvpControls {
  int budget = 200000;
  std::uint64_t seed = 20240817;
  // Sample plan for the perturbed check; count <= 0 picks the default
  // (1000 points, radius 10 * (1 + |x_eps|)).
  SamplePlan plan{};
};

// Thrown when the iteration budget runs out before both certificate
// inequalities hold; carries the best certificate assembled so far.
class EvpBudgetError : public BudgetError {
 public:
  EvpBudgetError(const std::string& what, EkelandCertificate best)
      : BudgetError(what), best_(std::move(best)) {}
  const EkelandCertificate& best() const { return best_; }

 private:
  EkelandCertificate best_;
};

// Minimizes f to eps-accuracy and certifies the result: the value gap
// against the declared infimum is at most eps^2, and the perturbed
// inequality holds on the seeded plan (restarting from any witness that
// breaks it).  Deterministic given the controls.
//
// Throws DivergenceError when f is unbounded below, EvpBudgetError when the
// budget is spent first.
EkelandCertificate evp_solve(const ConvexFnPtr& f, double eps,
                             const Point& start,
                             const EvpControls& controls = {});

struct EvpVerifyReport {
  bool pass_gap = false;
  bool pass_perturbed = false;
  double objective_value = 0.0;
  double gap = 0.0;
  double max_violation = 0.0;
  std::optional<Point> worst_witness;
  int points_checked = 0;

  bool pass() const { return pass_gap && pass_perturbed; }
};

// Re-derives both certificate inequalities from scratch: the objective and
// gap are recomputed from f, and the perturbed inequality is re-checked on
// the certificate's own plan plus any extra points.  Failures are report
// content, not errors.
EvpVerifyReport evp_verify(const EkelandCertificate& cert,
                           const ConvexFnPtr& f,
                           const std::vector<Point>& extra_points = {});

// The stationarity split of an eps-minimizer of the regularized objective:
//   lambda*zs - lambda*xs_eps = ys_eps + eps*us_eps,
// with xs_eps a subgradient of f at x_eps, ys_eps the duality image of
// x_eps - z, and us_eps in the dual unit ball.
struct StationarityDecomposition {
  Point x_eps;
  DualPoint xs_eps;
  DualPoint ys_eps;
  DualPoint us_eps;
  double residual = 0.0;
  // Set when the raw us_eps had dual norm above 1 + tolerance and was
  // clipped back to the ball: the inner minimization was not accurate
  // enough and the residual reflects the clipped remainder.
  bool decomposition_failure = false;
  std::string note;
};

StationarityDecomposition stationarity_decompose(
    const ConvexFnPtr& f, const Point& z, const DualPoint& zs, double lambda,
    const EkelandCertificate& cert);

// Radius R such that every x with regularized-objective value at most
// `level` satisfies |x| <= R, derived from the quadratic growth of the
// proximity term against an affine minorant of f.  Used to witness that the
// eps-family of minimizers stays bounded.
double psi_coercivity_radius(const PsiView& view, double level);

}  // namespace monolab
