#include "monolab/selftest.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "monolab/convex.hpp"
#include "monolab/ekeland.hpp"
#include "monolab/fitz.hpp"
#include "monolab/resolvent.hpp"
#include "monolab/rng.hpp"
#include "monolab/space.hpp"

namespace monolab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(3);
  os << std::scientific << v;
  return os.str();
}

// Tracks the worst margin seen; `ok` is monotone non-recoverable.
struct Worst {
  bool ok = true;
  double value = -kInf;  // largest defect observed
  std::string where;

  void observe(double defect, double bound, const std::string& label) {
    if (defect > value) {
      value = defect;
      where = label;
    }
    if (defect > bound) ok = false;
  }
};

// --- independent scalar helpers (no library calls) -------------------------

double soft_threshold(double v, double t) {
  if (v > t) return v - t;
  if (v < -t) return v + t;
  return 0.0;
}

// --- criterion 1: duality-map identities ------------------------------------

CriterionResult criterion_duality(std::uint64_t seed) {
  CriterionResult r{1, "duality-map-identity", false, ""};
  const std::size_t dims[] = {1, 2, 5, 20};
  const double ps[] = {1.5, 2.0, 3.0, 4.0};
  Worst ident, dualnorm, fd;

  for (std::size_t d : dims) {
    for (double p : ps) {
      SpaceSpec s(d, p);
      Rng rng(seed ^ (d * 1315423911u) ^
              static_cast<std::uint64_t>(p * 1000));
      for (int k = 0; k < 1000; ++k) {
        Point x(s, rng.cube(d, 4.0));
        DualPoint j = duality_map(x);
        const double nx = norm(x);
        const double defect1 = std::fabs(pairing(x, j) - nx * nx);
        ident.observe(defect1 / (1.0 + nx * nx), 1e-9,
                      "d=" + std::to_string(d) + " p=" + fmt(p));
        const double defect2 = std::fabs(norm(j) - nx);
        dualnorm.observe(defect2 / (1.0 + nx), 1e-9,
                         "d=" + std::to_string(d) + " p=" + fmt(p));
      }
      // Finite-difference cross-check of J as the gradient of the halved
      // squared norm, at points bounded away from the kinks on the axes.
      ConvexFnPtr half = make_pnorm_squared_half(s);
      for (int k = 0; k < 5; ++k) {
        std::vector<double> c = rng.cube(d, 3.0);
        for (double& ci : c)
          ci = (ci >= 0.0 ? std::max(ci, 0.3) : std::min(ci, -0.3));
        Point x(s, c);
        DualPoint j = duality_map(x);
        const double h = 1e-6;
        for (std::size_t i = 0; i < d; ++i) {
          std::vector<double> up = c, dn = c;
          up[i] += h;
          dn[i] -= h;
          const double g =
              (half->eval(Point(s, up)).value() -
               half->eval(Point(s, dn)).value()) /
              (2.0 * h);
          fd.observe(std::fabs(g - j.c[i]), 1e-6,
                     "d=" + std::to_string(d) + " p=" + fmt(p));
        }
      }
    }
  }

  r.pass = ident.ok && dualnorm.ok && fd.ok;
  r.detail = "identity defect " + fmt(ident.value) +
             " (bound 1e-9), dual-norm defect " + fmt(dualnorm.value) +
             " (bound 1e-9), finite-difference defect " + fmt(fd.value) +
             " (bound 1e-6)";
  if (!r.pass) r.detail += "; worst at " + ident.where;
  return r;
}

// --- criterion 2: subdifferential monotonicity -------------------------------

CriterionResult criterion_monotonicity(std::uint64_t seed) {
  CriterionResult r{2, "subdifferential-monotonicity", false, ""};

  struct Case {
    std::string name;
    ConvexFnPtr f;
    // Draw a point inside the effective domain.
    std::vector<double> (*draw)(Rng&, const SpaceSpec&);
  };

  auto draw_cube = [](Rng& rng, const SpaceSpec& s) {
    return rng.cube(s.dim, 3.0);
  };
  auto draw_box = [](Rng& rng, const SpaceSpec& s) {
    std::vector<double> c(s.dim);
    c[0] = rng.uniform(-1.0, 2.0);
    c[1] = rng.uniform(0.0, 1.0);
    return c;
  };
  auto draw_ball = [](Rng& rng, const SpaceSpec& s) {
    // Uniform direction scaled inside the radius-2 p-ball.
    std::vector<double> c = rng.cube(s.dim, 1.0);
    double n = 0.0;
    for (double v : c) n = std::max(n, std::fabs(v));
    double pn = 0.0;
    for (double v : c) pn += std::pow(std::fabs(v) / std::max(n, 1e-12), s.p);
    pn = n * std::pow(pn, 1.0 / s.p);
    const double target = 2.0 * rng.unit();
    if (pn > 1e-12)
      for (double& v : c) v *= target / pn;
    return c;
  };

  SpaceSpec s2(2, 2.0);
  SpaceSpec s2p3(2, 3.0);
  Eigen::MatrixXd m2(2, 2);
  m2 << 2.0, 0.5, 0.5, 1.0;

  std::vector<Case> cases;
  cases.push_back({"abs_sum", make_abs_sum(s2), draw_cube});
  cases.push_back({"pnorm_squared_half(p=3)", make_pnorm_squared_half(s2p3),
                   draw_cube});
  cases.push_back({"shifted_pnorm_squared_half",
                   make_shifted_pnorm_squared_half(Point(s2, {0.5, -1.0})),
                   draw_cube});
  cases.push_back({"quadratic", make_quadratic(s2, m2), draw_cube});
  cases.push_back(
      {"quadratic+linear", make_quadratic_general(s2, m2, {1.0, -2.0}, 0.5),
       draw_cube});
  cases.push_back({"max_affine",
                   make_max_affine(s2, {{1.0, 0.0}, {0.0, 1.0}, {-1.0, -1.0}},
                                   {0.0, 0.0, 0.25}),
                   draw_cube});
  cases.push_back({"indicator_box",
                   make_indicator_box(s2, {-1.0, 0.0}, {2.0, 1.0}), draw_box});
  cases.push_back({"indicator_ball", make_indicator_ball(s2, 2.0), draw_ball});
  cases.push_back({"affine", make_affine(s2, {0.7, -0.3}, 1.0), draw_cube});
  cases.push_back({"zero", make_zero(s2), draw_cube});
  cases.push_back({"sum(abs+quadratic)",
                   combine_sum(make_abs_sum(s2), make_quadratic(s2, m2)),
                   draw_cube});
  cases.push_back({"scaled(0.7*abs)", make_scaled(0.7, make_abs_sum(s2)),
                   draw_cube});
  {
    SpaceSpec s1(2, 2.0);  // inner space of the integral discretization
    Eigen::MatrixXd m1(2, 2);
    m1 << 2.0, 0.0, 0.0, 2.0;
    cases.push_back({"discretized_integral",
                     build_integral_functional(make_quadratic(s1, m1), 4, 1.0),
                     draw_cube});
  }

  Worst worst;
  for (const Case& c : cases) {
    Rng rng(seed ^ std::hash<std::string>{}(c.name));
    const SpaceSpec& fs = c.f->space();
    for (int k = 0; k < 1000; ++k) {
      Point x(fs, c.draw(rng, fs));
      Point y(fs, c.draw(rng, fs));
      DualPoint gx = c.f->subgradient(x);
      DualPoint gy = c.f->subgradient(y);
      const double v = pairing(sub(x, y), sub(gx, gy));
      const double scale =
          1.0 + norm(sub(x, y)) * norm(sub(gx, gy));
      worst.observe(-v / scale, 1e-10, c.name);
    }
  }

  r.pass = worst.ok;
  r.detail = "worst normalized pairing " + fmt(-worst.value) +
             " (bound -1e-10)";
  if (!worst.ok) r.detail += " at " + worst.where;
  return r;
}

// --- criterion 3: Ekeland certificates ---------------------------------------

CriterionResult criterion_ekeland(std::uint64_t seed) {
  CriterionResult r{3, "ekeland-certificates", false, ""};
  SpaceSpec s1(1, 2.0);

  // Each case: f, (z, zs), a closed-form infimum of the regularized
  // objective, and a direct formula for its value (computed right here,
  // with plain arithmetic, no library evaluation).
  struct Case {
    std::string name;
    ConvexFnPtr f;
    double z, zs;
    double inf_closed;
  };
  std::vector<Case> cases;
  {
    // 0.5*(x-z)^2 + 0.5*x^2 - x*zs: minimum at (z+zs)/2.
    const double z = 0.3, zs = -0.4;
    const double xhat = 0.5 * (z + zs);
    const double val = 0.5 * (xhat - z) * (xhat - z) +
                       0.5 * xhat * xhat - xhat * zs;
    cases.push_back({"quadratic", make_pnorm_squared_half(s1), z, zs, val});
  }
  {
    // 0.5*(x-z)^2 + |x| - x*zs: soft threshold of (z+zs) at 1.
    const double z = 1.0, zs = 0.25;
    const double xhat = soft_threshold(z + zs, 1.0);
    const double val =
        0.5 * (xhat - z) * (xhat - z) + std::fabs(xhat) - xhat * zs;
    cases.push_back({"abs_sum", make_abs_sum(s1), z, zs, val});
  }
  {
    // Box [0,1] plus slope-1 affine: clamp(z + zs - 1) onto the box.
    const double z = 0.5, zs = 0.0;
    const double xhat = std::clamp(z + zs - 1.0, 0.0, 1.0);
    const double val = 0.5 * (xhat - z) * (xhat - z) + xhat - xhat * zs;
    cases.push_back({"box+affine",
                     combine_sum(make_indicator_box(s1, {0.0}, {1.0}),
                                 make_affine(s1, {1.0}, 0.0)),
                     z, zs, val});
  }

  Worst gap_w, pert_w, res_w, us_w;
  for (const Case& c : cases) {
    ConvexFnPtr psi =
        build_psi(c.f, Point(s1, {c.z}), DualPoint(s1, {c.zs}), 1.0);
    for (double eps : {0.1, 0.01}) {
      EvpControls ec;
      ec.seed = seed ^ 0xC3;
      EkelandCertificate cert = evp_solve(psi, eps, Point(s1, {c.z}), ec);
      const std::string label = c.name + " eps=" + fmt(eps);
      gap_w.observe(cert.objective_value - c.inf_closed, eps * eps + 1e-9,
                    label);
      pert_w.observe(static_cast<double>(cert.perturbed_check.violations),
                     0.0, label);
      StationarityDecomposition dec = stationarity_decompose(
          c.f, Point(s1, {c.z}), DualPoint(s1, {c.zs}), 1.0, cert);
      res_w.observe(dec.residual, 1e-8, label);
      us_w.observe(norm(dec.us_eps), 1.0 + 1e-12, label);
    }
  }

  r.pass = gap_w.ok && pert_w.ok && res_w.ok && us_w.ok;
  r.detail = "worst gap " + fmt(gap_w.value) +
             " (bound eps^2+1e-9), perturbation violations " +
             fmt(pert_w.value) + " (bound 0), decomposition residual " +
             fmt(res_w.value) + " (bound 1e-8), |u*| " + fmt(us_w.value) +
             " (bound 1+1e-12)";
  if (!r.pass) r.detail += "; worst at " + gap_w.where;
  return r;
}

// --- criterion 4: quantitative stationarity bounds ---------------------------

CriterionResult criterion_bounds(std::uint64_t seed) {
  CriterionResult r{4, "stationarity-bounds", false, ""};
  SpaceSpec s1(1, 2.0);

  struct Case {
    std::string name;
    ConvexFnPtr f;
    double z, zs;  // a graph pair of the subdifferential
  };
  std::vector<Case> cases = {
      {"quadratic", make_pnorm_squared_half(s1), 0.7, 0.7},
      {"abs_sum", make_abs_sum(s1), 0.0, 0.3},
  };

  Worst primal_w, dual_w;
  for (const Case& c : cases) {
    for (double lambda : {0.5, 1.0, 2.0}) {
      ConvexFnPtr psi =
          build_psi(c.f, Point(s1, {c.z}), DualPoint(s1, {c.zs}), lambda);
      for (double eps : {1e-1, 1e-2, 1e-3}) {
        EvpControls ec;
        ec.seed = seed ^ 0xC4;
        EkelandCertificate cert = evp_solve(psi, eps, Point(s1, {c.z}), ec);
        StationarityDecomposition dec = stationarity_decompose(
            c.f, Point(s1, {c.z}), DualPoint(s1, {c.zs}), lambda, cert);
        const std::string label =
            c.name + " lambda=" + fmt(lambda) + " eps=" + fmt(eps);
        const double dx = std::fabs(cert.x_eps.c[0] - c.z);
        const double dxs = std::fabs(dec.xs_eps.c[0] - c.zs);
        primal_w.observe(dx - eps, 1e-6, label);
        dual_w.observe(dxs - 2.0 * eps / lambda, 1e-6, label);
      }
    }
  }

  r.pass = primal_w.ok && dual_w.ok;
  r.detail = "worst primal overshoot " + fmt(primal_w.value) +
             ", worst dual overshoot " + fmt(dual_w.value) +
             " (bounds 1e-6 beyond eps and 2*eps/lambda)";
  if (!r.pass) r.detail += "; worst at " + primal_w.where + " / " + dual_w.where;
  return r;
}

// --- criterion 5: surjectivity of the regularized inclusion ------------------

CriterionResult criterion_surjectivity(std::uint64_t seed) {
  CriterionResult r{5, "regularized-surjectivity", false, ""};
  Worst res_w, quad_w, abs_w;

  for (double p : {1.5, 2.0, 3.0}) {
    SpaceSpec s(2, p);
    Point zero(s, {0.0, 0.0});
    for (int which = 0; which < 2; ++which) {
      ConvexFnPtr f =
          which == 0 ? make_pnorm_squared_half(s) : make_abs_sum(s);
      const std::string fname = which == 0 ? "quadratic" : "abs_sum";
      for (double lambda : {0.5, 1.0, 2.0}) {
        Rng rng(seed ^ 0xC5 ^ static_cast<std::uint64_t>(p * 8192) ^
                static_cast<std::uint64_t>(lambda * 65536) ^
                static_cast<std::uint64_t>(which));
        for (int k = 0; k < 100; ++k) {
          DualPoint t(s, rng.cube(2, 3.0));
          SolveControls sc;
          sc.seed = seed + static_cast<std::uint64_t>(k);
          ResolventSolution sol =
              solve_regularized(f, lambda, zero, t, 0.0, sc);
          const std::string label = fname + " p=" + fmt(p) +
                                    " lambda=" + fmt(lambda) +
                                    " k=" + std::to_string(k);
          res_w.observe(std::max(sol.residual, sol.residual_recomputed),
                        1e-6, label);
          if (p == 2.0 && which == 0) {
            // Identity duality map: x = target / (1 + lambda) exactly.
            const double ox0 = t.c[0] / (1.0 + lambda);
            const double ox1 = t.c[1] / (1.0 + lambda);
            const double err = std::hypot(sol.x.c[0] - ox0, sol.x.c[1] - ox1);
            const double on = std::hypot(ox0, ox1);
            quad_w.observe(err / (1.0 + on), 1e-8, label);
          }
          if (p == 2.0 && which == 1) {
            const double e0 =
                std::fabs(sol.x.c[0] - soft_threshold(t.c[0], lambda));
            const double e1 =
                std::fabs(sol.x.c[1] - soft_threshold(t.c[1], lambda));
            abs_w.observe(std::max(e0, e1), 1e-10, label);
          }
        }
      }
    }
  }

  r.pass = res_w.ok && quad_w.ok && abs_w.ok;
  r.detail = "worst residual " + fmt(res_w.value) +
             " (bound 1e-6), linear-oracle error " + fmt(quad_w.value) +
             " (bound 1e-8), soft-threshold error " + fmt(abs_w.value) +
             " (bound 1e-10)";
  if (!r.pass)
    r.detail += "; worst at " + res_w.where + " / " + quad_w.where + " / " +
                abs_w.where;
  return r;
}

// --- criterion 6: Fitzpatrick identities -------------------------------------

CriterionResult criterion_fitzpatrick(std::uint64_t seed) {
  CriterionResult r{6, "fitzpatrick-identities", false, ""};
  SpaceSpec s1(1, 2.0);

  // (i) + (ii): a monotone four-point graph in one dimension.
  OperatorGraph g(s1, {{Point(s1, {0.0}), DualPoint(s1, {0.0})},
                       {Point(s1, {1.0}), DualPoint(s1, {1.0})},
                       {Point(s1, {2.0}), DualPoint(s1, {1.5})},
                       {Point(s1, {-1.0}), DualPoint(s1, {-0.8})}});
  OperatorRepr ga = OperatorRepr::finite_graph(g);
  FitzpatrickRepr h = fitzpatrick_build(ga);

  Worst brute_w, gap_w, graph_w;
  Rng rng(seed ^ 0xC6);
  for (int k = 0; k < 200; ++k) {
    const double x = rng.uniform(-3.0, 3.0);
    const double xs = rng.uniform(-3.0, 3.0);
    // Brute-force envelope and brute-force monotone gap, both as raw loops.
    double brute = -kInf;
    double gap = kInf;
    for (const auto& [u, us] : g.pairs) {
      brute = std::max(brute, u.c[0] * xs + x * us.c[0] - u.c[0] * us.c[0]);
      gap = std::min(gap, (x - u.c[0]) * (xs - us.c[0]));
    }
    const double hv =
        fitzpatrick_eval(h, Point(s1, {x}), DualPoint(s1, {xs}));
    brute_w.observe(std::fabs(hv - brute), 0.0, "point " + std::to_string(k));
    const double scale = 1.0 + std::fabs(x * xs);
    gap_w.observe(std::fabs(hv - (x * xs - gap)) / scale, 1e-12,
                  "point " + std::to_string(k));
  }
  for (const auto& [u, us] : g.pairs) {
    const double hv = fitzpatrick_eval(h, u, us);
    const double scale = 1.0 + std::fabs(u.c[0] * us.c[0]);
    graph_w.observe(std::fabs(hv - u.c[0] * us.c[0]) / scale, 1e-12,
                    "on-graph");
  }

  // (iii) + (v): a strictly positive definite matrix operator in d = 3.
  SpaceSpec s3(3, 2.0);
  Eigen::MatrixXd a3(3, 3);
  Rng mrng(seed ^ 0xC61);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) a3(i, j) = mrng.normal();
  Eigen::MatrixXd m3 =
      a3.transpose() * a3 / 3.0 + 0.5 * Eigen::MatrixXd::Identity(3, 3);
  OperatorRepr ma = OperatorRepr::psd_linear(s3, m3);
  FitzpatrickRepr hm = fitzpatrick_build(ma);

  Worst lower_w, grad_w;
  for (int k = 0; k < 10000; ++k) {
    Point x(s3, mrng.cube(3, 3.0));
    DualPoint xs(s3, mrng.cube(3, 3.0));
    const double hv = fitzpatrick_eval(hm, x, xs);
    lower_w.observe(pairing(x, xs) - hv, 1e-10, "lower bound");
  }
  for (int k = 0; k < 100; ++k) {
    Point x(s3, mrng.cube(3, 2.0));
    Eigen::Map<const Eigen::VectorXd> xv(x.c.data(), 3);
    Eigen::VectorXd mx = m3 * xv;
    DualPoint xs(s3, std::vector<double>(mx.data(), mx.data() + 3));
    ProductSubdiff ds = fitzpatrick_subdiff(hm, x, xs);
    const auto& gphi = ds.generators.at(0);
    double err = 0.0;
    for (int i = 0; i < 3; ++i) {
      err = std::max(err, std::fabs(gphi.g1.c[i] - mx(i)));
      err = std::max(err, std::fabs(gphi.g2.c[i] - x.c[i]));
    }
    grad_w.observe(err, 1e-10, "gradient condition");
  }

  // (iv): the identity operator's envelope is the symmetric square.
  SpaceSpec s2(2, 2.0);
  OperatorRepr ia =
      OperatorRepr::psd_linear(s2, Eigen::MatrixXd::Identity(2, 2));
  FitzpatrickRepr hi = fitzpatrick_build(ia);
  Worst ident_w;
  Rng irng(seed ^ 0xC62);
  for (int k = 0; k < 100; ++k) {
    Point x(s2, irng.cube(2, 3.0));
    DualPoint xs(s2, irng.cube(2, 3.0));
    const double hv = fitzpatrick_eval(hi, x, xs);
    const double sum0 = x.c[0] + xs.c[0];
    const double sum1 = x.c[1] + xs.c[1];
    const double expect = 0.25 * (sum0 * sum0 + sum1 * sum1);
    ident_w.observe(std::fabs(hv - expect), 1e-10, "identity envelope");
  }

  r.pass = brute_w.ok && gap_w.ok && graph_w.ok && lower_w.ok && grad_w.ok &&
           ident_w.ok;
  r.detail = "brute-force mismatch " + fmt(brute_w.value) +
             " (bound 0), gap identity " + fmt(gap_w.value) +
             " (bound 1e-12), on-graph " + fmt(graph_w.value) +
             " (bound 1e-12), lower-bound defect " + fmt(lower_w.value) +
             " (bound 1e-10), gradient defect " + fmt(grad_w.value) +
             " (bound 1e-10), identity-envelope defect " + fmt(ident_w.value) +
             " (bound 1e-10)";
  return r;
}

// --- criterion 7: product-space route agreement -------------------------------

CriterionResult criterion_product_route(std::uint64_t seed) {
  CriterionResult r{7, "product-route-agreement", false, ""};
  Worst agree_w;
  Rng rng(seed ^ 0xC7);

  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t d = 1 + static_cast<std::size_t>(rng.uniform_int(0, 9));
    SpaceSpec s(d, 2.0);
    const auto n = static_cast<Eigen::Index>(d);
    Eigen::MatrixXd a(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) a(i, j) = rng.normal();
    Eigen::MatrixXd m = a.transpose() * a / static_cast<double>(d) +
                        0.2 * Eigen::MatrixXd::Identity(n, n);
    OperatorRepr op = OperatorRepr::psd_linear(s, m);
    DualPoint zs(s, rng.cube(d, 2.0));
    for (double lambda : {0.5, 1.0, 2.0}) {
      SolveControls sc;
      sc.seed = seed + static_cast<std::uint64_t>(trial);
      ResolventSolution sol = rockafellar_solve(op, lambda, zs, 1e-8, sc);
      agree_w.observe(sol.direct_agreement.value_or(kInf), 1e-6,
                      "d=" + std::to_string(d) + " lambda=" + fmt(lambda));
    }
  }

  r.pass = agree_w.ok;
  r.detail =
      "worst distance between product-space and direct solutions " +
      fmt(agree_w.value) + " (bound 1e-6)";
  if (!agree_w.ok) r.detail += " at " + agree_w.where;
  return r;
}

// --- criterion 8: non-maximality detection ------------------------------------

CriterionResult criterion_nonmaximality(std::uint64_t /*seed*/) {
  CriterionResult r{8, "non-maximality-detection", false, ""};
  SpaceSpec s1(1, 2.0);

  OperatorGraph two(s1, {{Point(s1, {0.0}), DualPoint(s1, {0.0})},
                         {Point(s1, {1.0}), DualPoint(s1, {1.0})}});
  std::vector<ExtensionCandidate> cands =
      extension_scan(two, {-2.0, -2.0}, {2.0, 2.0}, 41);
  double corner_gap = -kInf;
  for (const ExtensionCandidate& c : cands)
    if (std::fabs(c.x.c[0] - 2.0) < 1e-9 && std::fabs(c.xs.c[0] - 2.0) < 1e-9)
      corner_gap = std::max(corner_gap, c.gap);
  const bool scan_ok = corner_gap >= 1.0 - 1e-9;

  OperatorGraph single(s1, {{Point(s1, {0.0}), DualPoint(s1, {0.0})}});
  MintyReport probe = minty_probe(OperatorRepr::finite_graph(single), 1.0,
                                  {DualPoint(s1, {5.0})}, 1e-6);
  const double res = probe.entries.at(0).residual;
  const bool probe_ok = res >= 4.0 - 1e-9;

  r.pass = scan_ok && probe_ok;
  r.detail = "corner candidate gap " + fmt(corner_gap) +
             " (bound >= 1-1e-9) across " + std::to_string(cands.size()) +
             " candidates, single-point residual " + fmt(res) +
             " (bound >= 4-1e-9)";
  return r;
}

// --- criterion 9: discretization order ----------------------------------------

CriterionResult criterion_discretization(std::uint64_t /*seed*/) {
  CriterionResult r{9, "discretization-order", false, ""};
  SpaceSpec s1(1, 2.0);
  Eigen::MatrixXd two(1, 1);
  two << 2.0;
  ConvexFnPtr square = make_quadratic(s1, two);  // r -> r^2

  auto trapezoid_error = [&](int nodes) {
    ConvexFnPtr phi = build_integral_functional(square, nodes, 1.0);
    std::vector<double> c(static_cast<std::size_t>(nodes));
    for (int i = 0; i < nodes; ++i)
      c[static_cast<std::size_t>(i)] =
          static_cast<double>(i) / static_cast<double>(nodes - 1);
    Point x(phi->space(), std::move(c));
    return std::fabs(phi->eval(x).value() - 1.0 / 3.0);
  };

  const double e100 = trapezoid_error(100);
  const double e200 = trapezoid_error(200);
  const double ratio = e100 / e200;
  r.pass = ratio >= 3.5 && ratio <= 4.5;
  r.detail = "error " + fmt(e100) + " at N=100, " + fmt(e200) +
             " at N=200, ratio " + fmt(ratio) + " (bounds [3.5, 4.5])";
  return r;
}

}  // namespace

SelftestReport run_selftest(std::uint64_t seed) {
  SelftestReport rep;
  rep.criteria.push_back(criterion_duality(seed));
  rep.criteria.push_back(criterion_monotonicity(seed));
  rep.criteria.push_back(criterion_ekeland(seed));
  rep.criteria.push_back(criterion_bounds(seed));
  rep.criteria.push_back(criterion_surjectivity(seed));
  rep.criteria.push_back(criterion_fitzpatrick(seed));
  rep.criteria.push_back(criterion_product_route(seed));
  rep.criteria.push_back(criterion_nonmaximality(seed));
  rep.criteria.push_back(criterion_discretization(seed));
  rep.all_pass = true;
  for (const CriterionResult& c : rep.criteria)
    rep.all_pass = rep.all_pass && c.pass;
  return rep;
}

}  // namespace monolab
