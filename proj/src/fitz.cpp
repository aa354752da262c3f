// Monotone operator graphs, the Fitzpatrick representation H(x, x*) =
// sup over the graph of <u, x*> + <x, u*> - <u, u*>, and the diagnostics
// built on it: monotonicity checks, the four-way equivalence report, and
// the extension scan for non-maximality witnesses.

#include "monolab/fitz.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "monolab/errors.hpp"
#include "monolab/tolerances.hpp"

namespace monolab {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double v = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) v += a[i] * b[i];
  return v;
}
}  // namespace

// --- OperatorGraph -----------------------------------------------------------

OperatorGraph::OperatorGraph(SpaceSpec s,
                             std::vector<std::pair<Point, DualPoint>> pairs_)
    : space(s), pairs(std::move(pairs_)) {
  if (pairs.empty())
    throw InputError("OperatorGraph: graph must contain at least one pair");
  for (const auto& [u, us] : pairs) {
    require_same_space(u.space, space, "OperatorGraph");
    require_same_space(us.space, space, "OperatorGraph");
  }
}

OperatorGraph graph_from_csv(const SpaceSpec& s, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("graph_from_csv: cannot open '" + path + "'");

  std::vector<std::pair<Point, DualPoint>> pairs;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    // Normalize separators, then split on whitespace.
    for (char& ch : line)
      if (ch == ',' || ch == ';' || ch == '\t' || ch == '\r') ch = ' ';
    std::istringstream row(line);
    std::vector<double> vals;
    std::string tok;
    bool numeric = true;
    while (row >> tok) {
      try {
        std::size_t used = 0;
        double v = std::stod(tok, &used);
        if (used != tok.size()) throw std::invalid_argument(tok);
        vals.push_back(v);
      } catch (const std::exception&) {
        numeric = false;
        break;
      }
    }
    if (vals.empty() && (numeric || lineno > 1)) continue;  // blank line
    if (!numeric) {
      if (lineno == 1) continue;  // header row
      throw ParseError("graph_from_csv: non-numeric value at line " +
                       std::to_string(lineno) + " of '" + path + "'");
    }
    if (vals.size() != 2 * s.dim) {
      throw SchemaError(
          "operator.graph_csv",
          "row " + std::to_string(lineno) + " has " +
              std::to_string(vals.size()) + " columns; expected 2*dim = " +
              std::to_string(2 * s.dim));
    }
    std::vector<double> uc(vals.begin(), vals.begin() + s.dim);
    std::vector<double> usc(vals.begin() + s.dim, vals.end());
    pairs.emplace_back(Point(s, std::move(uc)), DualPoint(s, std::move(usc)));
  }
  if (pairs.empty())
    throw ParseError("graph_from_csv: no data rows in '" + path + "'");
  return OperatorGraph(s, std::move(pairs));
}

void graph_to_csv(const OperatorGraph& g, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InputError("graph_to_csv: cannot write '" + path + "'");
  out.precision(17);
  for (const auto& [u, us] : g.pairs) {
    for (std::size_t i = 0; i < g.space.dim; ++i) {
      if (i) out << ',';
      out << u.c[i];
    }
    for (std::size_t i = 0; i < g.space.dim; ++i) out << ',' << us.c[i];
    out << '\n';
  }
}

// --- OperatorRepr ------------------------------------------------------------

OperatorRepr OperatorRepr::finite_graph(OperatorGraph g) {
  OperatorRepr a;
  a.variant_ = OperatorVariant::FiniteGraph;
  a.maximal_ = MaximalFlag::Unknown;  // finite graphs are never maximal
  a.space_ = g.space;
  a.graph_ = std::move(g);
  return a;
}

OperatorRepr OperatorRepr::psd_linear(const SpaceSpec& s, Eigen::MatrixXd M) {
  if (M.rows() != static_cast<Eigen::Index>(s.dim) ||
      M.cols() != static_cast<Eigen::Index>(s.dim))
    throw InputError("OperatorRepr: matrix shape does not match the space");
  const double mag = std::max(1.0, M.cwiseAbs().maxCoeff());
  if ((M - M.transpose()).cwiseAbs().maxCoeff() >
      Tolerances::psd_symmetry * mag)
    throw InputError("OperatorRepr: matrix must be symmetric");
  M = 0.5 * (M + M.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
  if (es.eigenvalues().minCoeff() < -Tolerances::psd_eigen_floor * mag)
    throw InputError("OperatorRepr: matrix must be positive semidefinite");

  OperatorRepr a;
  a.variant_ = OperatorVariant::PsdLinear;
  a.maximal_ = MaximalFlag::AssertedMaximal;
  a.space_ = s;
  a.matrix_ = std::move(M);
  return a;
}

OperatorRepr OperatorRepr::subdiff_of(ConvexFnPtr f) {
  if (!f) throw InputError("OperatorRepr: function must not be null");
  OperatorRepr a;
  a.variant_ = OperatorVariant::SubdiffOf;
  a.maximal_ = MaximalFlag::AssertedMaximal;
  a.space_ = f->space();
  a.fn_ = std::move(f);
  return a;
}

const OperatorGraph& OperatorRepr::graph() const {
  if (variant_ != OperatorVariant::FiniteGraph)
    throw InputError("OperatorRepr: not a finite graph");
  return graph_;
}

const Eigen::MatrixXd& OperatorRepr::matrix() const {
  if (variant_ != OperatorVariant::PsdLinear)
    throw InputError("OperatorRepr: not a linear operator");
  return matrix_;
}

const ConvexFnPtr& OperatorRepr::function() const {
  if (variant_ != OperatorVariant::SubdiffOf)
    throw InputError("OperatorRepr: not a subdifferential operator");
  return fn_;
}

std::optional<DualPoint> OperatorRepr::value_at(const Point& x,
                                                const DualPoint* toward) const {
  require_same_space(x.space, space_, "OperatorRepr::value_at");
  switch (variant_) {
    case OperatorVariant::PsdLinear: {
      Eigen::Map<const Eigen::VectorXd> xv(x.c.data(), x.c.size());
      Eigen::VectorXd y = matrix_ * xv;
      return DualPoint(space_, std::vector<double>(y.data(),
                                                   y.data() + y.size()));
    }
    case OperatorVariant::SubdiffOf: {
      SubdiffStructure s = fn_->subdiff_structure(x);
      if (s.is_empty()) return std::nullopt;
      if (toward) return fn_->subgradient_near(x, *toward);
      return fn_->subgradient(x);
    }
    case OperatorVariant::FiniteGraph: {
      for (const auto& [u, us] : graph_.pairs) {
        const double scale = 1.0 + norm(u);
        if (norm(sub(x, u)) <= 1e-12 * scale) return us;
      }
      return std::nullopt;
    }
  }
  return std::nullopt;
}

// --- monotonicity diagnostics -------------------------------------------------

MonotoneCheckResult check_monotone(const OperatorGraph& g) {
  MonotoneCheckResult res;
  double worst_margin = 0.0;  // most negative relative margin seen
  for (std::size_t i = 0; i < g.pairs.size(); ++i) {
    for (std::size_t j = i + 1; j < g.pairs.size(); ++j) {
      const Point dx = sub(g.pairs[i].first, g.pairs[j].first);
      const DualPoint ds = sub(g.pairs[i].second, g.pairs[j].second);
      const double v = pairing(dx, ds);
      const double scale = 1.0 + norm(dx) * norm(ds);
      const double margin = v / scale;
      if (v < -Tolerances::monotone_pair * scale && margin < worst_margin) {
        worst_margin = margin;
        res.monotone = false;
        res.i = i;
        res.j = j;
        res.value = v;
      }
    }
  }
  return res;
}

MonotoneGapResult monotone_gap(const OperatorRepr& a, const Point& z,
                               const DualPoint& zs, const SamplePlan& plan) {
  require_same_space(z.space, a.space(), "monotone_gap");
  require_same_space(zs.space, a.space(), "monotone_gap");

  MonotoneGapResult res;
  if (a.variant() == OperatorVariant::FiniteGraph) {
    res.exact = true;
    res.value = kInf;
    for (const auto& [u, us] : a.graph().pairs) {
      res.value = std::min(res.value, pairing(sub(z, u), sub(zs, us)));
    }
    return res;
  }

  // Sampled subgraph: the reported inf is over a subset, hence >= the true
  // inf (one-sided).  For subdifferentials each sampled point contributes
  // its exact per-point infimum over the whole subdifferential set.
  SamplePlan used = plan;
  if (used.count <= 0) used.count = 512;
  if (used.radius <= 0.0) used.radius = 5.0 * (1.0 + norm(z));
  res.plan = used;
  res.exact = false;
  res.value = kInf;

  const ConvexFunction* f =
      a.variant() == OperatorVariant::SubdiffOf ? a.function().get() : nullptr;

  auto consider = [&](const Point& u) {
    const Point d = sub(z, u);
    if (f) {
      SubdiffStructure s = f->subdiff_structure(u);
      if (s.is_empty()) return;
      // inf over x* in the set of <z-u, zs-x*> =
      //   <z-u, zs> + min over x* of <u-z, x*>.
      std::vector<double> c = u.c;
      for (std::size_t i = 0; i < c.size(); ++i) c[i] -= z.c[i];
      res.value = std::min(res.value,
                           pairing(d, zs) + structure_support_min(s, c));
    } else {
      std::optional<DualPoint> us = a.value_at(u);
      if (!us) return;
      res.value = std::min(res.value, pairing(d, sub(zs, *us)));
    }
  };

  consider(z);
  if (f) consider(f->finite_point());
  Rng rng(used.seed ^ 0x676170ull);
  for (int i = 0; i < used.count; ++i) {
    std::vector<double> c = rng.cube(z.space.dim, used.radius);
    for (std::size_t j = 0; j < c.size(); ++j) c[j] += z.c[j];
    consider(Point(z.space, std::move(c)));
  }
  return res;
}

// --- Fitzpatrick construction -------------------------------------------------

namespace {

// Pieces of the sup from an explicit list of graph pairs.
std::vector<FitzpatrickRepr::Piece> pieces_from_pairs(
    const std::vector<std::pair<Point, DualPoint>>& pairs) {
  std::vector<FitzpatrickRepr::Piece> out;
  out.reserve(pairs.size());
  for (const auto& [u, us] : pairs) {
    FitzpatrickRepr::Piece p;
    p.u = u.c;
    p.us = us.c;
    p.off = pairing(u, us);
    out.push_back(std::move(p));
  }
  return out;
}

// Domain samples for the GridSup fallback: a full grid when it stays small,
// otherwise seeded uniform draws from the same box.
std::vector<Point> sample_box(const SpaceSpec& s, const FitzOptions& opt) {
  std::vector<double> lo(s.dim, opt.lo), hi(s.dim, opt.hi);
  if (!opt.lo_axes.empty()) {
    if (opt.lo_axes.size() != s.dim || opt.hi_axes.size() != s.dim)
      throw InputError("fitzpatrick_build: per-axis bounds must match dim");
    lo = opt.lo_axes;
    hi = opt.hi_axes;
  }
  for (std::size_t i = 0; i < s.dim; ++i)
    if (!(lo[i] < hi[i]))
      throw InputError("fitzpatrick_build: sampling box must be nonempty");
  if (opt.per_axis < 2)
    throw InputError("fitzpatrick_build: per_axis must be at least 2");

  std::vector<Point> out;
  double total = std::pow(static_cast<double>(opt.per_axis),
                          static_cast<double>(s.dim));
  if (total <= static_cast<double>(opt.max_pieces)) {
    std::vector<int> idx(s.dim, 0);
    const int n = opt.per_axis;
    while (true) {
      std::vector<double> c(s.dim);
      for (std::size_t i = 0; i < s.dim; ++i)
        c[i] = lo[i] + (hi[i] - lo[i]) * idx[i] / (n - 1);
      out.emplace_back(s, std::move(c));
      std::size_t k = 0;
      while (k < s.dim && ++idx[k] == n) idx[k++] = 0;
      if (k == s.dim) break;
    }
  } else {
    Rng rng(opt.seed);
    for (int i = 0; i < opt.max_pieces; ++i) {
      std::vector<double> c(s.dim);
      for (std::size_t j = 0; j < s.dim; ++j)
        c[j] = rng.uniform(lo[j], hi[j]);
      out.emplace_back(s, std::move(c));
    }
  }
  return out;
}

FitzpatrickRepr grid_sup_from_samples(const OperatorRepr& a,
                                      const FitzOptions& opt,
                                      std::string warning) {
  FitzpatrickRepr h;
  h.variant = FitzpatrickRepr::Variant::GridSup;
  h.space = a.space();
  h.warning = std::move(warning);

  std::vector<std::pair<Point, DualPoint>> pairs;
  for (const Point& u : sample_box(a.space(), opt)) {
    std::optional<DualPoint> us = a.value_at(u);
    if (us) pairs.emplace_back(u, std::move(*us));
  }
  if (a.variant() == OperatorVariant::SubdiffOf) {
    const ConvexFnPtr& f = a.function();
    const Point& w = f->finite_point();
    if (std::optional<DualPoint> us = a.value_at(w))
      pairs.emplace_back(w, std::move(*us));
  }
  if (pairs.empty())
    throw InputError(
        "fitzpatrick_build: sampling box produced no graph points");
  h.pieces = pieces_from_pairs(pairs);
  return h;
}

}  // namespace

FitzpatrickRepr fitzpatrick_build(const OperatorRepr& a,
                                  const FitzOptions& options) {
  switch (a.variant()) {
    case OperatorVariant::FiniteGraph: {
      FitzpatrickRepr h;
      h.variant = FitzpatrickRepr::Variant::MaxAffine;
      h.space = a.space();
      h.pieces = pieces_from_pairs(a.graph().pairs);
      return h;
    }
    case OperatorVariant::PsdLinear: {
      const Eigen::MatrixXd& M = a.matrix();
      if (a.space().p != 2.0) {
        return grid_sup_from_samples(
            a, options,
            "closed form requires exponent p = 2; using a sampled "
            "lower approximation");
      }
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
      const double emax = std::max(1.0, es.eigenvalues().maxCoeff());
      if (es.eigenvalues().minCoeff() <= 1e-12 * emax) {
        return grid_sup_from_samples(
            a, options,
            "matrix is singular; closed form unavailable, using a sampled "
            "lower approximation");
      }
      FitzpatrickRepr h;
      h.variant = FitzpatrickRepr::Variant::ClosedQuadratic;
      h.space = a.space();
      h.M = M;
      h.Minv = es.eigenvectors() *
                es.eigenvalues().cwiseInverse().asDiagonal() *
                es.eigenvectors().transpose();
      return h;
    }
    case OperatorVariant::SubdiffOf:
      return grid_sup_from_samples(a, options, std::string());
  }
  throw Error("fitzpatrick_build: unreachable");
}

double fitzpatrick_eval(const FitzpatrickRepr& h, const Point& x,
                        const DualPoint& xs) {
  require_same_space(x.space, h.space, "fitzpatrick_eval");
  require_same_space(xs.space, h.space, "fitzpatrick_eval");
  if (h.variant == FitzpatrickRepr::Variant::ClosedQuadratic) {
    // H(x, x*) = 1/4 (x* + Mx)' M^{-1} (x* + Mx).
    Eigen::Map<const Eigen::VectorXd> xv(x.c.data(), x.c.size());
    Eigen::Map<const Eigen::VectorXd> sv(xs.c.data(), xs.c.size());
    Eigen::VectorXd v = sv + h.M * xv;
    return 0.25 * v.dot(h.Minv * v);
  }
  double best = -kInf;
  for (const auto& piece : h.pieces) {
    best = std::max(best, dot(piece.u, xs.c) + dot(piece.us, x.c) - piece.off);
  }
  return best;
}

ProductSubdiff fitzpatrick_subdiff(const FitzpatrickRepr& h, const Point& x,
                                   const DualPoint& xs) {
  require_same_space(x.space, h.space, "fitzpatrick_subdiff");
  require_same_space(xs.space, h.space, "fitzpatrick_subdiff");
  ProductSubdiff out;
  switch (h.variant) {
    case FitzpatrickRepr::Variant::GridSup:
      throw UnsupportedError(
          "fitzpatrick_subdiff: a sampled lower approximation has no "
          "trustworthy subdifferential");
    case FitzpatrickRepr::Variant::ClosedQuadratic: {
      Eigen::Map<const Eigen::VectorXd> xv(x.c.data(), x.c.size());
      Eigen::Map<const Eigen::VectorXd> sv(xs.c.data(), xs.c.size());
      Eigen::VectorXd v = sv + h.M * xv;
      Eigen::VectorXd g1 = 0.5 * v;
      Eigen::VectorXd g2 = 0.5 * (h.Minv * v);
      out.variant = SubdiffRepr::Variant::Singleton;
      out.generators.emplace_back(
          DualPoint(h.space, std::vector<double>(g1.data(),
                                                   g1.data() + g1.size())),
          Point(h.space, std::vector<double>(g2.data(),
                                               g2.data() + g2.size())));
      return out;
    }
    case FitzpatrickRepr::Variant::MaxAffine: {
      const double value = fitzpatrick_eval(h, x, xs);
      const double tie = Tolerances::fitz_active_tie * (1.0 + std::fabs(value));
      for (const auto& piece : h.pieces) {
        const double pv =
            dot(piece.u, xs.c) + dot(piece.us, x.c) - piece.off;
        if (pv >= value - tie) {
          out.generators.emplace_back(DualPoint(h.space, piece.us),
                                      Point(h.space, piece.u));
        }
      }
      out.variant = out.generators.size() == 1
                        ? SubdiffRepr::Variant::Singleton
                        : SubdiffRepr::Variant::Polytope;
      return out;
    }
  }
  throw Error("fitzpatrick_subdiff: unreachable");
}

// --- theorem-level checks ------------------------------------------------

namespace {

// Membership of (xs, x) in the product subdifferential, measured in stacked
// Euclidean coordinates.
bool product_subdiff_contains(const ProductSubdiff& ps, const DualPoint& xs,
                              const Point& x, double tol) {
  const std::size_t d = x.c.size();
  std::vector<double> cand(2 * d);
  for (std::size_t i = 0; i < d; ++i) cand[i] = xs.c[i];
  for (std::size_t i = 0; i < d; ++i) cand[d + i] = x.c[i];

  if (ps.variant == SubdiffRepr::Variant::Singleton) {
    double dist2 = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      const double a = cand[i] - ps.generators[0].g1.c[i];
      const double b = cand[d + i] - ps.generators[0].g2.c[i];
      dist2 += a * a + b * b;
    }
    return std::sqrt(dist2) <= tol;
  }
  SpaceSpec stacked(2 * d, 2.0);
  std::vector<std::vector<double>> gens;
  gens.reserve(ps.generators.size());
  for (const auto& g : ps.generators) {
    std::vector<double> v(2 * d);
    for (std::size_t i = 0; i < d; ++i) v[i] = g.g1.c[i];
    for (std::size_t i = 0; i < d; ++i) v[d + i] = g.g2.c[i];
    gens.push_back(std::move(v));
  }
  SubdiffStructure hull = SubdiffStructure::hull(
      stacked, std::vector<double>(2 * d, 0.0), std::move(gens));
  return structure_contains(hull, cand, tol);
}

}  // namespace

FitzTheoremReport fitzpatrick_theorem_check(
    const OperatorRepr& a,
    const std::vector<std::pair<Point, DualPoint>>& points,
    const FitzOptions& options) {
  FitzpatrickRepr h = fitzpatrick_build(a, options);
  FitzTheoremReport rep;
  rep.one_sided = h.one_sided();
  rep.all_consistent = true;

  for (const auto& [x, xs] : points) {
    FitzPointVerdict v;
    v.h_value = fitzpatrick_eval(h, x, xs);
    v.pairing_value = pairing(x, xs);
    const double scale = scale_of({v.h_value, v.pairing_value});
    v.pairing_equality =
        std::fabs(v.h_value - v.pairing_value) <=
        Tolerances::fitz_lower_bound * scale;

    switch (a.variant()) {
      case OperatorVariant::PsdLinear: {
        std::optional<DualPoint> mx = a.value_at(x);
        v.graph_member =
            norm(sub(xs, *mx)) <= Tolerances::graph_match * (1.0 + norm(*mx));
        break;
      }
      case OperatorVariant::FiniteGraph: {
        v.graph_member = false;
        for (const auto& [u, us] : a.graph().pairs) {
          const double d =
              std::max(norm(sub(x, u)), norm(sub(xs, us)));
          if (d <= Tolerances::graph_match * scale) {
            v.graph_member = true;
            break;
          }
        }
        break;
      }
      case OperatorVariant::SubdiffOf: {
        SamplePlan plan;
        plan.seed = options.seed;
        v.graph_member =
            subdiff_membership(*a.function(), x, xs, plan).holds;
        break;
      }
    }

    if (rep.one_sided) {
      // Only the refutation direction is conclusive: a sampled H strictly
      // above the pairing certifies the point is off the graph.
      const bool surely_off =
          v.h_value > v.pairing_value + Tolerances::fitz_lower_bound * scale;
      v.subdiff_member = false;
      v.witness_ok = false;
      v.consistent = !(surely_off && v.graph_member);
    } else {
      ProductSubdiff ps = fitzpatrick_subdiff(h, x, xs);
      v.subdiff_member = product_subdiff_contains(
          ps, xs, x, Tolerances::fitz_active_tie * scale);
      // The witness for the mixed inequality is the point itself: when
      // (x*, x) sits in the subdifferential, (u, u*) = (x, x*) attains
      // <u - x, u* - x*> = 0 >= 0.
      v.witness_ok = v.subdiff_member;
      v.consistent = (v.graph_member == v.pairing_equality) &&
                     (v.graph_member == v.witness_ok) &&
                     (v.graph_member == v.subdiff_member);
    }
    rep.all_consistent = rep.all_consistent && v.consistent;
    rep.points.push_back(v);
  }
  return rep;
}

// --- extension scan ------------------------------------------------------

std::vector<ExtensionCandidate> extension_scan(const OperatorGraph& g,
                                               const std::vector<double>& lo,
                                               const std::vector<double>& hi,
                                               int per_axis, double tol) {
  const std::size_t d = g.space.dim;
  if (lo.size() != 2 * d || hi.size() != 2 * d)
    throw InputError(
        "extension_scan: region must have 2*dim bounds (point then dual)");
  for (std::size_t i = 0; i < 2 * d; ++i)
    if (!(lo[i] <= hi[i]))
      throw InputError("extension_scan: region bounds out of order");
  if (per_axis < 2) throw InputError("extension_scan: per_axis must be >= 2");
  if (std::pow(static_cast<double>(per_axis), static_cast<double>(2 * d)) >
      2e6)
    throw InputError("extension_scan: grid too fine for this dimension");

  MonotoneCheckResult mono = check_monotone(g);
  if (!mono.monotone)
    throw InputError(
        "extension_scan: graph is not monotone; extension candidates are "
        "meaningless");

  std::vector<ExtensionCandidate> out;
  std::vector<int> idx(2 * d, 0);
  std::vector<double> w(2 * d);
  while (true) {
    for (std::size_t i = 0; i < 2 * d; ++i)
      w[i] = lo[i] + (hi[i] - lo[i]) * idx[i] / (per_axis - 1);
    Point x(g.space, std::vector<double>(w.begin(), w.begin() + d));
    DualPoint xs(g.space, std::vector<double>(w.begin() + d, w.end()));

    // gap = inf over the graph of <x-u, x*-u*>; computed directly from the
    // monotonicity form (not via the sup), so the two Fitzpatrick lines can
    // be cross-checked independently.
    double gap = kInf;
    for (const auto& [u, us] : g.pairs)
      gap = std::min(gap, pairing(sub(x, u), sub(xs, us)));
    if (gap > tol) out.push_back({x, xs, gap});

    std::size_t k = 0;
    while (k < 2 * d && ++idx[k] == per_axis) idx[k++] = 0;
    if (k == 2 * d) break;
  }
  return out;
}

}  // namespace monolab
