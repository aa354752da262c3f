#include "monolab/ekeland.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "monolab/tolerances.hpp"

namespace monolab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

SamplePlan default_plan(std::uint64_t seed, const Point& x) {
  SamplePlan plan;
  plan.seed = seed ^ 0x9e3779b97f4a7c15ull;
  plan.count = 1000;
  plan.radius = 10.0 * (1.0 + norm(x));
  return plan;
}

struct PerturbedScan {
  PerturbedCheck check;
  // Lowest objective value seen among the sampled points, for refining a
  // best-found infimum reference (and restarting from it when it beats the
  // candidate).
  double min_value = kInf;
  std::optional<Point> min_point;
  int points_attempted = 0;
};

// Evaluates the perturbed-minimality margin
//   fx - f(y) - eps * |y - x_eps|
// at every plan sample and extra point; a positive margin is a violation.
// Points where f is +infinity satisfy the inequality vacuously.
PerturbedScan scan_perturbed(const ConvexFunction& f, const Point& x_eps,
                             double fx, double eps, const SamplePlan& plan,
                             const std::vector<Point>& extras) {
  PerturbedScan out;
  out.check.plan = plan;
  out.check.max_violation = -kInf;

  const double count_tol = 1e-12 * (1.0 + std::fabs(fx));
  auto consider = [&](const Point& y) {
    ++out.points_attempted;
    ExtendedReal val = f.eval(y);
    if (!val.finite()) return;
    if (val.value() < out.min_value) {
      out.min_value = val.value();
      out.min_point = y;
    }
    double viol = fx - val.value() - eps * norm(sub(y, x_eps));
    if (viol > count_tol) ++out.check.violations;
    if (viol > out.check.max_violation) {
      out.check.max_violation = viol;
      out.check.worst_witness = y;
    }
  };

  Rng rng(plan.seed);
  for (int i = 0; i < plan.count; ++i) {
    std::vector<double> offs = rng.cube(x_eps.space.dim, plan.radius);
    std::vector<double> c = x_eps.c;
    for (std::size_t j = 0; j < c.size(); ++j) c[j] += offs[j];
    consider(Point(x_eps.space, std::move(c)));
  }
  for (const Point& y : extras) {
    require_same_space(y.space, x_eps.space, "perturbed check");
    consider(y);
  }

  if (!std::isfinite(out.check.max_violation) &&
      out.check.max_violation < 0.0) {
    // Every sample fell outside the domain; nothing contradicts the
    // inequality.
    out.check.max_violation = 0.0;
  }
  return out;
}

}  // namespace

EkelandCertificate evp_solve(const ConvexFnPtr& f, double eps,
                             const Point& start, const EvpControls& controls) {
  if (!f) throw InputError("evp_solve: function must not be null");
  if (!std::isfinite(eps) || eps <= 0.0)
    throw InputError("evp_solve: eps must be a positive finite number");
  require_same_space(f->space(), start.space, "evp_solve");
  if (controls.budget <= 0)
    throw InputError("evp_solve: budget must be positive");
  if (f->known_unbounded_below())
    throw DivergenceError(
        "evp_solve: objective is unbounded below; no approximate minimizer "
        "exists");

  const int max_restarts = 6;
  int remaining = controls.budget;
  double res_target = std::min(0.45 * eps, 1e-9);
  Point x0 = start;
  double best_value_seen = kInf;

  std::optional<EkelandCertificate> best;
  double best_score = kInf;

  for (int attempt = 0; attempt <= max_restarts; ++attempt) {
    MinimizeControls mc;
    mc.residual_target = res_target;
    mc.budget = std::max(remaining, 1);
    mc.seed = controls.seed + static_cast<std::uint64_t>(attempt);
    MinimizeResult res = minimize(f, x0, mc);
    remaining -= std::max(res.iterations, 1);
    best_value_seen = std::min(best_value_seen, res.value);

    InfReference ref;
    if (std::optional<double> known = f->known_infimum()) {
      ref.value = *known;
      ref.provenance = InfProvenance::ClosedForm;
    } else {
      ref.value = best_value_seen;
      ref.provenance = InfProvenance::BestFound;
    }

    SamplePlan plan =
        controls.plan.count > 0 ? controls.plan : default_plan(controls.seed,
                                                               res.x);
    PerturbedScan scan = scan_perturbed(*f, res.x, res.value, eps, plan,
                                        f->probe_points(res.x));
    if (ref.provenance == InfProvenance::BestFound &&
        scan.min_value < ref.value) {
      ref.value = scan.min_value;
    }

    EkelandCertificate cert;
    cert.x_eps = res.x;
    cert.eps = eps;
    cert.objective_value = res.value;
    cert.inf_reference = ref;
    cert.gap_1a = res.value - ref.value;
    cert.perturbed_check = scan.check;
    cert.route = res.route;
    cert.iterations = controls.budget - remaining;

    const double scale = scale_of({cert.objective_value, ref.value});
    const double gap_tol = eps * eps + Tolerances::ekeland_gap * scale;
    const double pert_tol = Tolerances::ekeland_perturbed * scale;
    const bool ok_gap =
        cert.gap_1a <= gap_tol && cert.gap_1a >= -1e-12 * scale;
    const bool ok_pert = cert.perturbed_check.max_violation <= pert_tol;

    const double score = std::max({cert.gap_1a - eps * eps,
                                   cert.perturbed_check.max_violation, 0.0});
    if (!best || score < best_score) {
      best = cert;
      best_score = score;
    }

    if (ok_gap && ok_pert) return cert;
    if (remaining <= 0 || attempt == max_restarts) break;

    // Restart from whatever contradicted the certificate: the worst
    // perturbed-inequality witness if there is one, else the best sampled
    // point, and tighten the inner tolerance either way.
    if (cert.perturbed_check.worst_witness &&
        cert.perturbed_check.max_violation > pert_tol) {
      x0 = *cert.perturbed_check.worst_witness;
    } else if (scan.min_point && scan.min_value < res.value) {
      x0 = *scan.min_point;
    } else {
      x0 = res.x;
    }
    res_target = std::max(res_target / 100.0, 1e-13);
  }

  throw EvpBudgetError(
      "evp_solve: budget exhausted before both certificate inequalities "
      "held",
      *best);
}

EvpVerifyReport evp_verify(const EkelandCertificate& cert,
                           const ConvexFnPtr& f,
                           const std::vector<Point>& extra_points) {
  if (!f) throw InputError("evp_verify: function must not be null");
  require_same_space(f->space(), cert.x_eps.space, "evp_verify");
  if (!std::isfinite(cert.eps) || cert.eps <= 0.0)
    throw InputError("evp_verify: certificate eps must be positive");

  EvpVerifyReport report;
  ExtendedReal v = f->eval(cert.x_eps);
  if (!v.finite()) {
    // The certified point is not even in the domain: both inequalities are
    // unfalsifiable in the useful direction, so the report fails outright.
    report.objective_value = kInf;
    report.gap = kInf;
    report.max_violation = kInf;
    report.worst_witness = f->finite_point();
    report.pass_gap = false;
    report.pass_perturbed = false;
    return report;
  }

  const double fx = v.value();
  report.objective_value = fx;
  report.gap = fx - cert.inf_reference.value;
  const double scale = scale_of({fx, cert.inf_reference.value});
  report.pass_gap =
      report.gap <= cert.eps * cert.eps + Tolerances::ekeland_gap * scale &&
      report.gap >= -1e-12 * scale;

  PerturbedScan scan = scan_perturbed(*f, cert.x_eps, fx, cert.eps,
                                      cert.perturbed_check.plan, extra_points);
  report.max_violation = scan.check.max_violation;
  report.worst_witness = scan.check.worst_witness;
  report.points_checked = scan.points_attempted;
  report.pass_perturbed =
      report.max_violation <= Tolerances::ekeland_perturbed * scale;
  return report;
}

StationarityDecomposition stationarity_decompose(
    const ConvexFnPtr& f, const Point& z, const DualPoint& zs, double lambda,
    const EkelandCertificate& cert) {
  if (!f) throw InputError("stationarity_decompose: function must not be null");
  require_same_space(f->space(), z.space, "stationarity_decompose");
  require_same_space(f->space(), zs.space, "stationarity_decompose");
  require_same_space(f->space(), cert.x_eps.space, "stationarity_decompose");
  if (!std::isfinite(lambda) || lambda <= 0.0)
    throw InputError("stationarity_decompose: lambda must be positive");
  if (!std::isfinite(cert.eps) || cert.eps <= 0.0)
    throw InputError("stationarity_decompose: certificate eps must be positive");

  const Point& x = cert.x_eps;
  DualPoint ys = duality_map(sub(x, z));
  // Pick the subgradient of f at x_eps that makes the multiplier smallest:
  // the one nearest to (lambda*zs - ys) / lambda.
  DualPoint target = scale(1.0 / lambda, sub(scale(lambda, zs), ys));
  DualPoint xs = f->subgradient_near(x, target);

  DualPoint r = sub(sub(scale(lambda, zs), scale(lambda, xs)), ys);
  DualPoint u_raw = scale(1.0 / cert.eps, r);
  const double nr = norm(u_raw);

  StationarityDecomposition d;
  d.x_eps = x;
  d.xs_eps = xs;
  d.ys_eps = ys;
  if (nr > 1.0 + Tolerances::unit_ball_slack) {
    d.us_eps = scale(1.0 / nr, u_raw);
    d.decomposition_failure = true;
    std::ostringstream msg;
    msg << "multiplier norm " << nr
        << " exceeds the dual unit ball: the inner minimization was not "
           "accurate enough; shrink its tolerance and resolve";
    d.note = msg.str();
  } else {
    d.us_eps = u_raw;
  }
  d.residual = norm(sub(r, scale(cert.eps, d.us_eps)));
  return d;
}

double psi_coercivity_radius(const PsiView& view, double level) {
  if (!view.f) throw InputError("psi_coercivity_radius: view has no function");
  if (!std::isfinite(view.lambda) || view.lambda <= 0.0)
    throw InputError("psi_coercivity_radius: lambda must be positive");

  // With t = |x|, an affine minorant of f at the properness witness w gives
  //   objective(x) >= 0.5 t^2 - c1 t - c0,
  //   c1 = |z| + lambda*(|g0| + |zs|),  c0 = lambda*(|g0|*|w| - f(w)),
  // so every x in the level set satisfies t <= c1 + sqrt(c1^2 + 2(c0+level)).
  const Point& w = view.f->finite_point();
  DualPoint g0 = view.f->subgradient(w);
  const double f0 = view.f->eval(w).value();
  const double c1 =
      norm(view.z) + view.lambda * (norm(g0) + norm(view.zs));
  const double c0 = view.lambda * (norm(g0) * norm(w) - f0);
  const double disc = c1 * c1 + 2.0 * (c0 + level);
  return c1 + std::sqrt(std::max(disc, 0.0));
}

}  // namespace monolab
