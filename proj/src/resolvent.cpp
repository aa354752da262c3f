// Resolvent-type solvers: the direct route through the regularized
// objective, the quantitative maximality test, the Minty-style surjectivity
// probe, and the product-space route through the Fitzpatrick function.

#include "monolab/resolvent.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "monolab/ekeland.hpp"
#include "monolab/errors.hpp"
#include "monolab/inner_solve.hpp"
#include "monolab/tolerances.hpp"

namespace monolab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Point zero_point(const SpaceSpec& s) {
  return Point(s, std::vector<double>(s.dim, 0.0));
}

// The residual |target - J(x-z) - lambda*xs|_q assembled with the shared
// space primitives.
double residual_via_ops(const Point& x, const Point& z, double lambda,
                        const DualPoint& xs, const DualPoint& target) {
  return norm(sub(sub(target, duality_map(sub(x, z))), scale(lambda, xs)));
}

// The same residual recomputed from scratch: duality image and q-norm by
// direct formula, so certification never rests on a single code path.
double residual_recomputed_raw(const Point& x, const Point& z, double lambda,
                               const DualPoint& xs, const DualPoint& target) {
  const std::size_t d = x.space.dim;
  const double p = x.space.p;
  const double q = x.space.q;

  std::vector<double> v(d);
  double vmax = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    v[i] = x.c[i] - z.c[i];
    vmax = std::max(vmax, std::fabs(v[i]));
  }
  std::vector<double> j(d, 0.0);
  if (vmax >= 1e-300) {
    double acc = 0.0;
    for (std::size_t i = 0; i < d; ++i)
      acc += std::pow(std::fabs(v[i]) / vmax, p);
    const double np = vmax * std::pow(acc, 1.0 / p);
    const double factor = std::pow(np, 2.0 - p);
    for (std::size_t i = 0; i < d; ++i) {
      const double a = std::pow(std::fabs(v[i]), p - 1.0);
      j[i] = (v[i] >= 0.0 ? a : -a) * factor;
    }
  }

  double rmax = 0.0;
  std::vector<double> r(d);
  for (std::size_t i = 0; i < d; ++i) {
    r[i] = target.c[i] - j[i] - lambda * xs.c[i];
    rmax = std::max(rmax, std::fabs(r[i]));
  }
  if (rmax < 1e-300) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < d; ++i) acc += std::pow(std::fabs(r[i]) / rmax, q);
  return rmax * std::pow(acc, 1.0 / q);
}

bool high_accuracy_route(const std::string& route) {
  return route == "closed-form" || route == "newton" ||
         route == "simplex-dual";
}

}  // namespace

ResolventSolution solve_regularized(const ConvexFnPtr& f, double lambda,
                                    const Point& z, const DualPoint& target,
                                    double tol, const SolveControls& controls) {
  if (!f) throw InputError("solve_regularized: function must not be null");
  if (!std::isfinite(lambda) || lambda <= 0.0)
    throw InputError("solve_regularized: lambda must be positive");
  require_same_space(f->space(), z.space, "solve_regularized");
  require_same_space(f->space(), target.space, "solve_regularized");

  // The optimality condition of the regularized objective built with
  // target/lambda is exactly the requested inclusion.
  ConvexFnPtr psi = build_psi(f, z, scale(1.0 / lambda, target), lambda);
  Point start = f->eval(z).finite() ? z : f->finite_point();

  MinimizeControls mc;
  mc.residual_target = 0.5 * (tol > 0.0 ? tol : 1e-8);
  mc.budget = controls.budget;
  mc.seed = controls.seed;
  MinimizeResult res = minimize(psi, start, mc);

  const double eff_tol =
      tol > 0.0 ? tol
                : (high_accuracy_route(res.route)
                       ? Tolerances::resolvent_closed_form
                       : Tolerances::resolvent_iterative);

  ResolventSolution sol;
  sol.x = res.x;
  sol.lambda = lambda;
  sol.target = target;
  sol.route = SolveRoute::Direct;
  sol.iterations = res.iterations;

  DualPoint j = duality_map(sub(res.x, z));
  DualPoint sub_target = scale(1.0 / lambda, sub(target, j));
  try {
    sol.xs_sel = f->subgradient_near(res.x, sub_target);
  } catch (const InputError&) {
    sol.xs_sel = DualPoint(f->space(), std::vector<double>(f->space().dim, 0.0));
    sol.residual = kInf;
    sol.residual_recomputed = kInf;
    sol.certified = false;
    sol.note = "minimizer left the effective domain; no subgradient exists";
    return sol;
  }

  sol.residual = residual_via_ops(res.x, z, lambda, sol.xs_sel, target);
  sol.residual_recomputed =
      residual_recomputed_raw(res.x, z, lambda, sol.xs_sel, target);
  const double scale_r = scale_of({sol.residual, sol.residual_recomputed});
  sol.certified =
      sol.residual <= eff_tol &&
      std::fabs(sol.residual - sol.residual_recomputed) <=
          Tolerances::resolvent_recompute * scale_r &&
      !res.budget_exhausted;
  std::ostringstream note;
  note << "inner route: " << res.route;
  if (res.budget_exhausted) note << " (budget exhausted, best effort)";
  sol.note = note.str();
  return sol;
}

MaximalityTestResult maximality_extension_test(
    const ConvexFnPtr& f, double lambda, const Point& z, const DualPoint& zs,
    const std::vector<double>& eps_schedule, double tol,
    const SolveControls& controls) {
  if (!f) throw InputError("maximality_extension_test: null function");
  if (!std::isfinite(lambda) || lambda <= 0.0)
    throw InputError("maximality_extension_test: lambda must be positive");
  if (eps_schedule.empty())
    throw InputError("maximality_extension_test: empty eps schedule");
  for (std::size_t i = 0; i < eps_schedule.size(); ++i) {
    if (!(eps_schedule[i] > 0.0))
      throw InputError("maximality_extension_test: eps must be positive");
    if (i > 0 && !(eps_schedule[i] < eps_schedule[i - 1]))
      throw InputError(
          "maximality_extension_test: eps schedule must be decreasing");
  }
  require_same_space(f->space(), z.space, "maximality_extension_test");
  require_same_space(f->space(), zs.space, "maximality_extension_test");

  MaximalityTestResult out;
  out.eps_schedule = eps_schedule;
  out.tol = tol;

  OperatorRepr a = OperatorRepr::subdiff_of(f);
  SamplePlan plan;
  plan.seed = controls.seed;
  MonotoneGapResult gap = monotone_gap(a, z, zs, plan);
  out.gap_estimate = gap.value;
  out.gap_exact = gap.exact;
  out.related =
      gap.value >= -Tolerances::monotonicity * scale_of({gap.value});
  if (!out.related) {
    // Not monotonically related: the convergence claim has no premise, so
    // the bound table is not even attempted.
    out.bounds_ok = false;
    return out;
  }

  ConvexFnPtr psi = build_psi(f, z, zs, lambda);
  Point start = f->eval(z).finite() ? z : f->finite_point();
  out.bounds_ok = true;
  for (std::size_t i = 0; i < eps_schedule.size(); ++i) {
    const double eps = eps_schedule[i];
    EvpControls ec;
    ec.budget = controls.budget;
    ec.seed = controls.seed + i;
    EkelandCertificate cert = evp_solve(psi, eps, start, ec);
    StationarityDecomposition dec =
        stationarity_decompose(f, z, zs, lambda, cert);
    const double dx = norm(sub(cert.x_eps, z));
    const double dxs = norm(sub(dec.xs_eps, zs));
    out.distances.emplace_back(dx, dxs);
    if (dx > eps + tol || dxs > 2.0 * eps / lambda + tol ||
        dec.decomposition_failure) {
      out.bounds_ok = false;
    }
    start = cert.x_eps;  // warm start the tighter solve
  }
  return out;
}

MintyReport minty_probe(const OperatorRepr& a, double lambda,
                        const std::vector<DualPoint>& targets, double tol,
                        const SolveControls& controls) {
  if (!std::isfinite(lambda) || lambda <= 0.0)
    throw InputError("minty_probe: lambda must be positive");
  MintyReport rep;
  rep.tol = tol;
  rep.all_within_tol = true;

  for (const DualPoint& target : targets) {
    require_same_space(target.space, a.space(), "minty_probe");
    MintyEntry e;
    e.target = target;
    switch (a.variant()) {
      case OperatorVariant::SubdiffOf: {
        ResolventSolution sol =
            solve_regularized(a.function(), lambda, zero_point(a.space()),
                              target, tol, controls);
        e.x = sol.x;
        e.xs_sel = sol.xs_sel;
        e.residual = sol.residual;
        e.certified = sol.certified;
        e.route = "regularized";
        break;
      }
      case OperatorVariant::PsdLinear: {
        if (a.space().p == 2.0) {
          const Eigen::MatrixXd& M = a.matrix();
          const auto n = static_cast<Eigen::Index>(a.space().dim);
          Eigen::Map<const Eigen::VectorXd> t(target.c.data(), n);
          Eigen::VectorXd x =
              (Eigen::MatrixXd::Identity(n, n) + lambda * M).ldlt().solve(t);
          Eigen::VectorXd mx = M * x;
          Point xp(a.space(), std::vector<double>(x.data(), x.data() + n));
          DualPoint xs(a.space(),
                       std::vector<double>(mx.data(), mx.data() + n));
          e.x = xp;
          e.xs_sel = xs;
          e.residual = residual_via_ops(xp, zero_point(a.space()), lambda, xs,
                                        target);
          e.certified = e.residual <= tol;
          e.route = "linear-solve";
        } else {
          ConvexFnPtr quad = make_quadratic_general(
              a.space(), a.matrix(),
              std::vector<double>(a.space().dim, 0.0), 0.0);
          ResolventSolution sol = solve_regularized(
              quad, lambda, zero_point(a.space()), target, tol, controls);
          e.x = sol.x;
          e.xs_sel = sol.xs_sel;
          e.residual = sol.residual;
          e.certified = sol.certified;
          e.route = "regularized";
        }
        break;
      }
      case OperatorVariant::FiniteGraph: {
        // Discrete search: the best of the listed pairs.  A residual
        // bounded away from zero at some target is non-surjectivity (hence
        // non-maximality) evidence.
        double best = kInf;
        const std::pair<Point, DualPoint>* best_pair = nullptr;
        for (const auto& pr : a.graph().pairs) {
          const double r = residual_via_ops(
              pr.first, zero_point(a.space()), lambda, pr.second, target);
          if (r < best) {
            best = r;
            best_pair = &pr;
          }
        }
        e.x = best_pair->first;
        e.xs_sel = best_pair->second;
        e.residual = best;
        e.certified = best <= tol;
        e.route = "graph-search";
        break;
      }
    }
    rep.max_residual = std::max(rep.max_residual, e.residual);
    rep.all_within_tol = rep.all_within_tol && e.residual <= tol;
    rep.entries.push_back(std::move(e));
  }
  return rep;
}

ResolventSolution rockafellar_solve(const OperatorRepr& a, double lambda,
                                    const DualPoint& zs, double tol,
                                    const SolveControls& controls) {
  if (!std::isfinite(lambda) || lambda <= 0.0)
    throw InputError("rockafellar_solve: lambda must be positive");
  require_same_space(zs.space, a.space(), "rockafellar_solve");
  if (a.space().p != 2.0)
    throw UnsupportedError(
        "rockafellar_solve: the product route requires exponent p = 2");
  if (a.variant() == OperatorVariant::SubdiffOf)
    throw UnsupportedError(
        "rockafellar_solve: operator must be a linear map or finite graph; "
        "use solve_regularized for subdifferential operators");

  const std::size_t d = a.space().dim;
  const SpaceSpec stacked(2 * d, 2.0);
  const auto n = static_cast<Eigen::Index>(d);
  Eigen::Map<const Eigen::VectorXd> s(zs.c.data(), n);

  // G(w) = 1/2 |w|^2 + H(w) for the shifted operator lambda*A - zs, as a
  // catalog function over the stacked product coordinates (x, x*).
  ConvexFnPtr g_fn;
  if (a.variant() == OperatorVariant::PsdLinear) {
    const Eigen::MatrixXd& M = a.matrix();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
    const double emax = std::max(1.0, es.eigenvalues().maxCoeff());
    if (es.eigenvalues().minCoeff() <= 1e-12 * emax)
      throw UnsupportedError(
          "rockafellar_solve: matrix must be positive definite for the "
          "closed-form product route");
    Eigen::MatrixXd Minv = es.eigenvectors() *
                           es.eigenvalues().cwiseInverse().asDiagonal() *
                           es.eigenvectors().transpose();
    // H(x, x*) = 1/(4 lambda) v' M^{-1} v - <x, zs>, v = x* + lambda*Mx + zs.
    Eigen::MatrixXd B(n, 2 * n);
    B.leftCols(n) = lambda * M;
    B.rightCols(n) = Eigen::MatrixXd::Identity(n, n);
    Eigen::MatrixXd Q = Eigen::MatrixXd::Identity(2 * n, 2 * n) +
                        B.transpose() * Minv * B / (2.0 * lambda);
    Eigen::VectorXd lin = B.transpose() * (Minv * s) / (2.0 * lambda);
    lin.head(n) -= s;
    const double cst = s.dot(Minv * s) / (4.0 * lambda);
    g_fn = make_quadratic_general(
        stacked, Q, std::vector<double>(lin.data(), lin.data() + 2 * n), cst);
  } else {
    std::vector<std::vector<double>> slopes;
    std::vector<double> intercepts;
    for (const auto& [u, us] : a.graph().pairs) {
      std::vector<double> slope(2 * d);
      for (std::size_t i = 0; i < d; ++i)
        slope[i] = lambda * us.c[i] - zs.c[i];  // shifted operator value
      for (std::size_t i = 0; i < d; ++i) slope[d + i] = u.c[i];
      double off = 0.0;
      for (std::size_t i = 0; i < d; ++i) off += u.c[i] * slope[i];
      slopes.push_back(std::move(slope));
      intercepts.push_back(-off);
    }
    g_fn = combine_sum(make_pnorm_squared_half(stacked),
                       make_max_affine(stacked, std::move(slopes),
                                       std::move(intercepts)));
  }

  MinimizeControls mc;
  mc.residual_target = 0.25 * tol;
  mc.budget = controls.budget;
  mc.seed = controls.seed;
  MinimizeResult res = minimize(g_fn, zero_point(stacked), mc);

  ResolventSolution sol;
  sol.lambda = lambda;
  sol.target = zs;
  sol.route = SolveRoute::ProductSpace;
  sol.iterations = res.iterations;
  sol.x = Point(a.space(),
                std::vector<double>(res.x.c.begin(), res.x.c.begin() + d));
  // The dual slot of the minimizer carries the shifted operator value
  // lambda*A(x) - zs; undo the shift to select the operator value.
  std::vector<double> xs_c(d);
  for (std::size_t i = 0; i < d; ++i)
    xs_c[i] = (res.x.c[d + i] + zs.c[i]) / lambda;
  sol.xs_sel = DualPoint(a.space(), std::move(xs_c));

  sol.residual = residual_via_ops(sol.x, zero_point(a.space()), lambda,
                                  sol.xs_sel, zs);
  sol.residual_recomputed = residual_recomputed_raw(
      sol.x, zero_point(a.space()), lambda, sol.xs_sel, zs);

  std::ostringstream note;
  note << "inner route: " << res.route;
  if (a.variant() == OperatorVariant::PsdLinear) {
    const Eigen::MatrixXd& M = a.matrix();
    Eigen::VectorXd xd =
        (Eigen::MatrixXd::Identity(n, n) + lambda * M).ldlt().solve(s);
    Point direct(a.space(), std::vector<double>(xd.data(), xd.data() + n));
    sol.direct_agreement = norm(sub(sol.x, direct));
    note << "; direct-route distance " << *sol.direct_agreement;
  } else {
    note << "; finite graphs are not maximal, residual is honest evidence";
  }
  sol.note = note.str();

  const double scale_r = scale_of({sol.residual, sol.residual_recomputed});
  sol.certified =
      sol.residual <= tol &&
      std::fabs(sol.residual - sol.residual_recomputed) <=
          Tolerances::resolvent_recompute * scale_r &&
      !res.budget_exhausted;
  return sol;
}

}  // namespace monolab
