// Minimization routes for catalog functions.  Every route ends the same way:
// the stationarity residual is recomputed from the structural subdifferential
// and reported honestly, so a caller can always tell how good the iterate is.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "monolab/errors.hpp"
#include "monolab/inner_solve.hpp"
#include "monolab/tolerances.hpp"

namespace monolab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double finite_value(const ConvexFunction& f, const Point& x) {
  const ExtendedReal v = f.eval(x);
  return v.finite() ? v.value() : kInf;
}

// Throws once the running value drops past a floor that only an objective
// unbounded below can reach.
void check_divergence(double value, double reference) {
  if (value < -1e14 * (1.0 + std::abs(reference))) {
    throw DivergenceError(
        "minimize: objective values diverge to -infinity; the problem looks "
        "unbounded below");
  }
}

struct TermSplit {
  std::vector<FlatTerm> smooth;
  std::vector<FlatTerm> nonsmooth;
};

TermSplit split_terms(const ConvexFnPtr& f) {
  TermSplit out;
  for (auto& t : flatten_terms(f)) {
    (t.leaf->smooth() ? out.smooth : out.nonsmooth).push_back(std::move(t));
  }
  return out;
}

double smooth_value(const std::vector<FlatTerm>& terms, const Point& x) {
  double v = 0.0;
  for (const auto& t : terms) v += t.coeff * t.leaf->eval(x).value();
  return v;
}

DualPoint smooth_grad(const std::vector<FlatTerm>& terms, const Point& x) {
  DualPoint g(x.space, std::vector<double>(x.space.dim, 0.0));
  for (const auto& t : terms) g = add(g, scale(t.coeff, t.leaf->gradient(x)));
  return g;
}

double euclid_sq(const std::vector<double>& v) {
  double s = 0.0;
  for (double a : v) s += a * a;
  return s;
}

// --- damped Newton for smooth objectives -------------------------------------

Point newton_route(const ConvexFunction& f, Point x, double target,
                   int budget, int& used) {
  const auto n = static_cast<Eigen::Index>(f.space().dim);
  double v = finite_value(f, x);
  if (!std::isfinite(v)) {
    x = f.finite_point();
    v = finite_value(f, x);
  }
  const double v0 = v;
  Eigen::MatrixXd H(n, n);

  while (used < budget) {
    ++used;
    const DualPoint g = f.gradient(x);
    if (norm(g) <= target) break;

    H.setZero();
    f.accumulate_hessian(x, 1.0, H);
    double mu = 1e-12 * (1.0 + H.diagonal().cwiseAbs().maxCoeff());
    Point dir = x;  // placeholder; overwritten below
    bool have_dir = false;
    for (int tries = 0; tries < 7 && !have_dir; ++tries) {
      const Eigen::MatrixXd Hd =
          H + mu * Eigen::MatrixXd::Identity(n, n);
      Eigen::LDLT<Eigen::MatrixXd> ldlt(Hd);
      if (ldlt.info() == Eigen::Success) {
        Eigen::VectorXd gv(n);
        for (Eigen::Index i = 0; i < n; ++i)
          gv(i) = g.c[static_cast<std::size_t>(i)];
        const Eigen::VectorXd d = ldlt.solve(-gv);
        double slope = 0.0;
        for (Eigen::Index i = 0; i < n; ++i)
          slope += d(i) * g.c[static_cast<std::size_t>(i)];
        if (slope < 0.0 && d.allFinite()) {
          std::vector<double> dc(d.data(), d.data() + n);
          dir = Point(f.space(), std::move(dc));
          have_dir = true;
          break;
        }
      }
      mu *= 100.0;
    }
    if (!have_dir) {
      // Steepest-descent fallback in the right geometry: step against the
      // inverse duality image of the gradient.
      dir = scale(-1.0, duality_map_inverse(g));
    }

    double slope = pairing(dir, g);
    if (slope >= 0.0) break;  // no descent available; gradient is tiny
    double t = 1.0;
    bool moved = false;
    for (int ls = 0; ls < 60; ++ls) {
      const Point cand = add(x, scale(t, dir));
      const double vc = finite_value(f, cand);
      if (vc <= v + 1e-4 * t * slope) {
        x = cand;
        v = vc;
        moved = true;
        break;
      }
      t *= 0.5;
    }
    check_divergence(v, v0);
    if (!moved) break;
  }
  return x;
}

// --- accelerated proximal gradient + coordinate polish ------------------------

struct ProxPiece {
  ConvexFnPtr leaf;
  double coeff = 1.0;

  Point apply(const Point& w, double t) const {
    auto r = leaf->prox(w, t * coeff);
    // Availability was checked when the route was picked.
    return *r;
  }
};

Point fista_route(const ConvexFnPtr& f, const std::vector<FlatTerm>& smooth,
                  const ProxPiece& piece, Point x, double target, int budget,
                  int& used) {
  // Land the start in the domain of the nonsmooth piece.
  x = piece.apply(x, 1e-12);
  double fx = finite_value(*f, x);
  const double f0 = fx;
  Point y = x;
  double momentum = 1.0;
  double L = 1.0;
  int stalls = 0;

  while (used < budget) {
    ++used;
    const DualPoint g = smooth_grad(smooth, y);
    Point cand = x;
    for (int bt = 0; bt < 60; ++bt) {
      // Euclidean forward-backward step; the backtracked majorizer below
      // keeps it valid whatever the space exponent is.
      Point fw(y.space, std::vector<double>(y.space.dim));
      for (std::size_t i = 0; i < fw.c.size(); ++i)
        fw.c[i] = y.c[i] - g.c[i] / L;
      cand = piece.apply(fw, 1.0 / L);
      const double fy = smooth_value(smooth, y);
      const double fc = smooth_value(smooth, cand);
      double lin = 0.0;
      double sq = 0.0;
      for (std::size_t i = 0; i < fw.c.size(); ++i) {
        const double d = cand.c[i] - y.c[i];
        lin += g.c[i] * d;
        sq += d * d;
      }
      if (fc <= fy + lin + 0.5 * L * sq + 1e-14 * (1.0 + std::abs(fy))) break;
      L *= 2.0;
      if (L > 1e18) break;
    }
    const double fcand = finite_value(*f, cand);
    if (fcand > fx + 1e-14 * (1.0 + std::abs(fx))) {
      // Objective restart: drop the momentum and retry from the current x.
      momentum = 1.0;
      y = x;
      if (++stalls > 5) break;
      continue;
    }
    stalls = 0;
    const Point x_prev = x;
    x = cand;
    fx = fcand;
    const double m_next =
        0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
    y = add(x, scale((momentum - 1.0) / m_next, sub(x, x_prev)));
    momentum = m_next;
    check_divergence(fx, f0);

    if (used % 25 == 0 || euclid_sq(sub(x, x_prev).c) <
                              1e-28 * (1.0 + euclid_sq(x.c))) {
      if (stationarity_residual(*f, x) <= target) return x;
    }
  }
  return x;
}

// Golden-section scan of a 1-d convex slice; returns the minimizing t.
double golden_minimize(const std::function<double(double)>& h, double a,
                       double b) {
  // Expand whichever side still descends (convexity makes this safe).
  double fa = h(a), fb = h(b);
  for (int i = 0; i < 40 && fa < std::min(h(0.5 * (a + b)), fb); ++i) {
    a -= (b - a);
    fa = h(a);
  }
  for (int i = 0; i < 40 && fb < std::min(h(0.5 * (a + b)), fa); ++i) {
    b += (b - a);
    fb = h(b);
  }
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - gr * (b - a);
  double d = a + gr * (b - a);
  double fc = h(c), fd = h(d);
  for (int it = 0; it < 90; ++it) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - gr * (b - a);
      fc = h(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + gr * (b - a);
      fd = h(d);
    }
    if (b - a < 1e-15 * (1.0 + std::abs(a) + std::abs(b))) break;
  }
  return 0.5 * (a + b);
}

// Cyclic coordinate polish: exact 1-d minimizations with snapping to the
// kink locations of the nonsmooth piece (zeros for the l1 term, bounds for a
// box).  Sharpens the iterate to the accuracy the certificates need.
Point coordinate_polish(const ConvexFnPtr& f, const ProxPiece& piece, Point x,
                        double target, int budget, int& used) {
  const std::size_t d = f->space().dim;
  if (d > 64) return x;
  std::vector<double> snap_lo(d, -kInf), snap_hi(d, kInf);
  bool snap_zero = false;
  {
    const ConvexFunction& leaf = *piece.leaf;
    if (leaf.kind() == FnKind::AbsSum) snap_zero = true;
    if (auto box = as_indicator_box(leaf)) {
      snap_lo = box->lo;
      snap_hi = box->hi;
    }
  }

  for (int sweep = 0; sweep < 25 && used < budget; ++sweep) {
    ++used;
    for (std::size_t i = 0; i < d; ++i) {
      Point probe = x;
      auto slice = [&](double t) {
        probe.c[i] = t;
        const ExtendedReal v = f->eval(probe);
        return v.finite() ? v.value() : kInf;
      };
      const double r = 1.0 + 2.0 * std::abs(x.c[i]);
      double best_t = golden_minimize(slice, x.c[i] - r, x.c[i] + r);
      double best_v = slice(best_t);
      auto try_snap = [&](double t) {
        if (!std::isfinite(t)) return;
        const double v = slice(t);
        // Accept ties up to evaluation noise: landing exactly on the kink
        // is the whole point, and the stationarity check below arbitrates.
        if (v <= best_v + 1e-12 * (1.0 + std::abs(best_v))) {
          best_v = v;
          best_t = t;
        }
      };
      if (snap_zero && std::abs(best_t) < 1e-7) try_snap(0.0);
      if (std::abs(best_t - snap_lo[i]) < 1e-7) try_snap(snap_lo[i]);
      if (std::abs(best_t - snap_hi[i]) < 1e-7) try_snap(snap_hi[i]);
      x.c[i] = best_t;
    }
    if (stationarity_residual(*f, x) <= target) break;
  }
  return x;
}

// --- dual simplex method for quadratic + max-affine ----------------------------

bool all_quadratic(const std::vector<FlatTerm>& smooth) {
  for (const auto& t : smooth) {
    switch (t.leaf->kind()) {
      case FnKind::Quadratic:
      case FnKind::Affine:
        break;
      case FnKind::PNormSquaredHalf:
      case FnKind::ShiftedPNormSquaredHalf:
        if (t.leaf->space().p != 2.0) return false;
        break;
      default:
        return false;
    }
  }
  return true;
}

std::vector<double> project_simplex_vec(std::vector<double> w) {
  std::vector<double> u = w;
  std::sort(u.begin(), u.end(), std::greater<double>());
  double css = 0.0, theta = 0.0;
  int rho = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    css += u[i];
    const double t = (css - 1.0) / static_cast<double>(i + 1);
    if (u[i] - t > 0.0) {
      rho = static_cast<int>(i + 1);
      theta = t;
    }
  }
  if (rho == 0) {
    std::fill(w.begin(), w.end(), 1.0 / static_cast<double>(w.size()));
    return w;
  }
  for (auto& v : w) v = std::max(0.0, v - theta);
  return w;
}

Point simplex_dual_route(const ConvexFnPtr& f,
                         const std::vector<FlatTerm>& smooth,
                         const FlatTerm& ma_term, const MaxAffineView& view,
                         const Point& start, double target, int budget,
                         int& used) {
  const auto n = static_cast<Eigen::Index>(f->space().dim);
  const auto k = static_cast<Eigen::Index>(view.slopes.size());
  const SpaceSpec& sp = f->space();

  // Assemble the (constant) quadratic model of the smooth part.
  Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(n, n);
  const Point origin(sp, std::vector<double>(sp.dim, 0.0));
  Eigen::VectorXd lin(n);
  for (const auto& t : smooth) t.leaf->accumulate_hessian(origin, t.coeff, Q);
  {
    const DualPoint g0 = smooth_grad(smooth, origin);
    for (Eigen::Index i = 0; i < n; ++i)
      lin(i) = g0.c[static_cast<std::size_t>(i)];
  }
  Eigen::LLT<Eigen::MatrixXd> llt(Q);
  if (llt.info() != Eigen::Success) return start;  // caller falls back

  Eigen::MatrixXd S(k, n);
  Eigen::VectorXd tvec(k);
  for (Eigen::Index j = 0; j < k; ++j) {
    for (Eigen::Index i = 0; i < n; ++i)
      S(j, i) = ma_term.coeff * view.slopes[static_cast<std::size_t>(j)]
                                           [static_cast<std::size_t>(i)];
    tvec(j) = ma_term.coeff * view.intercepts[static_cast<std::size_t>(j)];
  }

  auto x_of = [&](const Eigen::VectorXd& theta) {
    return Eigen::VectorXd(llt.solve(-(lin + S.transpose() * theta)));
  };
  auto to_point = [&](const Eigen::VectorXd& xv) {
    return Point(sp, std::vector<double>(xv.data(), xv.data() + n));
  };

  // Lipschitz overestimate for the dual gradient.
  const Eigen::MatrixXd SQ = llt.solve(S.transpose());
  const double lip = std::max(1e-30, (S * SQ).norm());

  Eigen::VectorXd theta =
      Eigen::VectorXd::Constant(k, 1.0 / static_cast<double>(k));
  Eigen::VectorXd y = theta;
  Eigen::VectorXd theta_old = theta;
  double momentum = 1.0;
  Point best = start;
  double best_res = kInf;

  for (int round = 0; round < 10 && used < budget; ++round) {
    for (int it = 0; it < 2000 && used < budget; ++it) {
      ++used;
      const Eigen::VectorXd xv = x_of(y);
      const Eigen::VectorXd grad = S * xv + tvec;  // ascent direction
      std::vector<double> cand(y.data(), y.data() + k);
      for (Eigen::Index j = 0; j < k; ++j) cand[j] += grad(j) / lip;
      cand = project_simplex_vec(std::move(cand));
      theta_old = theta;
      for (Eigen::Index j = 0; j < k; ++j) theta(j) = cand[j];
      const double m_next =
          0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
      y = theta + ((momentum - 1.0) / m_next) * (theta - theta_old);
      momentum = m_next;
      if ((theta - theta_old).lpNorm<Eigen::Infinity>() < 1e-16) break;
    }
    const Point xh = to_point(x_of(theta));
    const double res = stationarity_residual(*f, xh);
    if (res < best_res) {
      best_res = res;
      best = xh;
    }
    if (best_res <= target) break;
    momentum = 1.0;
    y = theta;
  }
  return best;
}

// --- norm-adapted subgradient fallback ------------------------------------------

Point subgradient_route(const ConvexFnPtr& f, Point x, double target,
                        int budget, int& used) {
  if (!f->eval(x).finite()) x = f->finite_point();
  double fx = finite_value(*f, x);
  const double f0 = fx;
  Point best = x;
  double best_v = fx;
  const auto inf_known = f->known_infimum();
  const double c0 = 0.5 * (1.0 + norm(x));

  for (int k = 0; used < budget; ++k) {
    ++used;
    const SubdiffStructure s = f->subdiff_structure(x);
    if (s.is_empty() || s.tag == SubdiffStructure::Tag::MembershipOnly) break;
    const std::vector<double> g =
        nearest_element(s, std::vector<double>(f->space().dim, 0.0));
    const double gq = lr_norm(g, f->space().q);
    if (gq <= target) {
      best = x;
      break;
    }
    // Unit step direction in the primal norm via the inverse duality map.
    const Point dir =
        scale(-1.0 / gq, duality_map_inverse(DualPoint(f->space(), g)));
    double alpha = inf_known ? std::max(0.0, (fx - *inf_known)) / gq
                             : c0 / std::sqrt(static_cast<double>(k + 1));
    if (alpha <= 0.0) alpha = c0 / std::sqrt(static_cast<double>(k + 1));
    Point cand = add(x, scale(alpha, dir));
    for (int shrink = 0; shrink < 40 && !f->eval(cand).finite(); ++shrink) {
      alpha *= 0.5;
      cand = add(x, scale(alpha, dir));
    }
    if (!f->eval(cand).finite()) break;
    x = cand;
    fx = finite_value(*f, x);
    if (fx < best_v) {
      best_v = fx;
      best = x;
    }
    check_divergence(fx, f0);
  }
  return best;
}

}  // namespace

MinimizeResult minimize(const ConvexFnPtr& f, const Point& start,
                        const MinimizeControls& controls) {
  require_same_space(f->space(), start.space, "minimize");
  if (f->known_unbounded_below()) {
    throw DivergenceError("minimize: objective is unbounded below");
  }

  MinimizeResult out;
  int used = 0;

  if (auto m = f->known_minimizer()) {
    out.x = *m;
    out.route = "closed-form";
  } else {
    const TermSplit split = split_terms(f);
    if (split.nonsmooth.empty()) {
      out.x = newton_route(*f, start, controls.residual_target,
                           controls.budget, used);
      out.route = "newton";
    } else if (split.nonsmooth.size() == 1) {
      const FlatTerm& ns = split.nonsmooth.front();
      const Point probe = f->finite_point();
      if (ns.leaf->prox(probe, 1.0).has_value()) {
        ProxPiece piece{ns.leaf, ns.coeff};
        out.x = fista_route(f, split.smooth, piece, start,
                            controls.residual_target, controls.budget, used);
        out.x = coordinate_polish(f, piece, out.x, controls.residual_target,
                                  controls.budget, used);
        out.route = "fista";
      } else if (const auto view = as_max_affine(*ns.leaf);
                 view && all_quadratic(split.smooth)) {
        out.x = simplex_dual_route(f, split.smooth, ns, *view, start,
                                   controls.residual_target, controls.budget,
                                   used);
        out.route = "simplex-dual";
      } else {
        out.x = subgradient_route(f, start, controls.residual_target,
                                  controls.budget, used);
        out.route = "subgradient";
      }
    } else {
      out.x = subgradient_route(f, start, controls.residual_target,
                                controls.budget, used);
      out.route = "subgradient";
    }
  }

  out.iterations = used;
  out.budget_exhausted = used >= controls.budget;
  out.value = finite_value(*f, out.x);
  out.residual = stationarity_residual(*f, out.x);
  out.certified = out.residual <= controls.residual_target * (1.0 + 1e-9) +
                                      Tolerances::floor;
  return out;
}

}  // namespace monolab
