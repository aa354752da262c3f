// Convex function catalog: evaluation, structural subdifferentials, Fenchel
// conjugates where closed forms exist, proximal maps, and the membership /
// convexity / stationarity helpers built on top of them.

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "monolab/convex.hpp"
#include "monolab/errors.hpp"
#include "monolab/tolerances.hpp"

namespace monolab {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<double> to_vec(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

Eigen::VectorXd to_eig(const std::vector<double>& v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i)
    out(static_cast<Eigen::Index>(i)) = v[i];
  return out;
}

double sgn(double x) { return (x > 0.0) - (x < 0.0); }

}  // namespace

std::string fn_kind_name(FnKind k) {
  switch (k) {
    case FnKind::Quadratic: return "quadratic";
    case FnKind::PNormSquaredHalf: return "pnorm-squared-half";
    case FnKind::ShiftedPNormSquaredHalf: return "shifted-pnorm-squared-half";
    case FnKind::AbsSum: return "abs-sum";
    case FnKind::MaxAffine: return "max-affine";
    case FnKind::IndicatorBox: return "indicator-box";
    case FnKind::IndicatorBall: return "indicator-ball";
    case FnKind::Affine: return "affine";
    case FnKind::Sum: return "sum";
    case FnKind::Scaled: return "scaled";
    case FnKind::DiscretizedIntegral: return "discretized-integral";
    case FnKind::RegularizedObjective: return "regularized-objective";
  }
  return "unknown";
}

// --- base class ---------------------------------------------------------------

ExtendedReal ConvexFunction::eval(const Point& x) const {
  require_same_space(space_, x.space, "eval");
  return do_eval(x);
}

SubdiffStructure ConvexFunction::subdiff_structure(const Point& x) const {
  require_same_space(space_, x.space, "subdiff");
  return do_subdiff(x);
}

DualPoint ConvexFunction::subgradient_near(const Point& x,
                                           const DualPoint& target) const {
  const SubdiffStructure s = subdiff_structure(x);
  if (s.is_empty()) {
    throw InputError("subgradient selection: subdifferential is empty here");
  }
  return DualPoint(space_, nearest_element(s, target.c));
}

DualPoint ConvexFunction::subgradient(const Point& x) const {
  return subgradient_near(
      x, DualPoint(space_, std::vector<double>(space_.dim, 0.0)));
}

std::optional<ExtendedReal> ConvexFunction::conjugate(const DualPoint&) const {
  return std::nullopt;
}

std::optional<double> ConvexFunction::known_infimum() const {
  if (auto m = known_minimizer()) {
    const ExtendedReal v = eval(*m);
    if (v.finite()) return v.value();
  }
  return std::nullopt;
}

std::optional<Point> ConvexFunction::known_minimizer() const {
  return std::nullopt;
}

bool ConvexFunction::known_unbounded_below() const { return false; }

std::optional<Point> ConvexFunction::prox(const Point&, double) const {
  return std::nullopt;
}

DualPoint ConvexFunction::gradient(const Point&) const {
  throw Error("gradient: function is not smooth");
}

void ConvexFunction::accumulate_hessian(const Point&, double,
                                        Eigen::MatrixXd&) const {
  throw Error("accumulate_hessian: not available for this function");
}

std::vector<Point> ConvexFunction::probe_points(const Point&) const {
  return {};
}

void ConvexFunction::finalize(Point finite_point) {
  require_same_space(space_, finite_point.space, "finite point");
  finite_point_ = std::move(finite_point);
  const ExtendedReal v = do_eval(finite_point_);
  if (!v.finite()) {
    throw InputError(fn_kind_name(kind_) +
                     ": improper (no point of finite value was exhibited)");
  }
  // Cheap convexity smoke test; the thorough seeded check lives in
  // convexity_check and runs in the test suites.
  const double worst = convexity_check(*this, 0xC0FFEEULL, 8, 2.0);
  if (worst > 1e-7) {
    throw InputError(fn_kind_name(kind_) +
                     ": convexity spot-check failed (relative violation " +
                     std::to_string(worst) + ")");
  }
}

// --- quadratic ------------------------------------------------------------------

namespace {

class QuadraticFunction final : public ConvexFunction {
 public:
  QuadraticFunction(const SpaceSpec& s, Eigen::MatrixXd M,
                    Eigen::VectorXd lin, double cst)
      : ConvexFunction(FnKind::Quadratic, s),
        M_(std::move(M)),
        lin_(std::move(lin)),
        cst_(cst) {
    const auto n = static_cast<Eigen::Index>(s.dim);
    if (M_.rows() != n || M_.cols() != n || lin_.size() != n) {
      throw InputError("quadratic: matrix/vector size does not match space");
    }
    const double mscale = 1.0 + M_.cwiseAbs().maxCoeff();
    if ((M_ - M_.transpose()).cwiseAbs().maxCoeff() >
        Tolerances::psd_symmetry * mscale) {
      throw InputError("quadratic: matrix is not symmetric");
    }
    M_ = 0.5 * (M_ + M_.transpose());
    es_.compute(M_);
    const double emax = es_.eigenvalues().cwiseAbs().maxCoeff();
    if (es_.eigenvalues().minCoeff() <
        -Tolerances::psd_eigen_floor * (1.0 + emax)) {
      throw InputError("quadratic: matrix is not positive semidefinite");
    }
    rank_tol_ = 1e-12 * (1.0 + emax);
  }

  const Eigen::MatrixXd& matrix() const { return M_; }
  const Eigen::VectorXd& linear() const { return lin_; }
  double constant() const { return cst_; }

  std::optional<ExtendedReal> conjugate(const DualPoint& xs) const override {
    const Eigen::VectorXd u = to_eig(xs.c) - lin_;
    const Eigen::VectorXd w = es_.eigenvectors().transpose() * u;
    double val = 0.0;
    for (Eigen::Index i = 0; i < w.size(); ++i) {
      const double e = es_.eigenvalues()(i);
      if (e > rank_tol_) {
        val += 0.5 * w(i) * w(i) / e;
      } else if (std::abs(w(i)) > 1e-9 * (1.0 + u.norm())) {
        return ExtendedReal::infinity();  // outside the range of M
      }
    }
    return ExtendedReal(val - cst_);
  }

  std::optional<Point> known_minimizer() const override {
    const Eigen::VectorXd w = es_.eigenvectors().transpose() * (-lin_);
    Eigen::VectorXd sol = Eigen::VectorXd::Zero(w.size());
    for (Eigen::Index i = 0; i < w.size(); ++i) {
      const double e = es_.eigenvalues()(i);
      if (e > rank_tol_) {
        sol(i) = w(i) / e;
      } else if (std::abs(w(i)) > 1e-9 * (1.0 + lin_.norm())) {
        return std::nullopt;  // linear term escapes along the kernel
      }
    }
    return Point(space_, to_vec(es_.eigenvectors() * sol));
  }

  bool known_unbounded_below() const override {
    return !known_minimizer().has_value();
  }

  std::optional<Point> prox(const Point& w, double t) const override {
    const auto n = static_cast<Eigen::Index>(space_.dim);
    const Eigen::MatrixXd A = Eigen::MatrixXd::Identity(n, n) + t * M_;
    const Eigen::VectorXd rhs = to_eig(w.c) - t * lin_;
    return Point(space_, to_vec(A.ldlt().solve(rhs)));
  }

  bool smooth() const override { return true; }
  DualPoint gradient(const Point& x) const override {
    return DualPoint(space_, to_vec(M_ * to_eig(x.c) + lin_));
  }
  bool hessian_available() const override { return true; }
  void accumulate_hessian(const Point&, double coeff,
                          Eigen::MatrixXd& H) const override {
    H += coeff * M_;
  }

 protected:
  ExtendedReal do_eval(const Point& x) const override {
    const Eigen::VectorXd v = to_eig(x.c);
    return ExtendedReal(0.5 * v.dot(M_ * v) + lin_.dot(v) + cst_);
  }

  SubdiffStructure do_subdiff(const Point& x) const override {
    return SubdiffStructure::singleton(space_,
                                       to_vec(M_ * to_eig(x.c) + lin_));
  }

 private:
  Eigen::MatrixXd M_;
  Eigen::VectorXd lin_;
  double cst_;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es_;
  double rank_tol_ = 0.0;
};

// --- half squared norm, optionally around a center -----------------------------

class PNormSquaredHalfFunction final : public ConvexFunction {
 public:
  PNormSquaredHalfFunction(FnKind kind, const SpaceSpec& s, Point center)
      : ConvexFunction(kind, s), z_(std::move(center)) {}

  const Point& center() const { return z_; }

  std::optional<ExtendedReal> conjugate(const DualPoint& xs) const override {
    const double nq = norm(xs);
    return ExtendedReal(pairing(z_, xs) + 0.5 * nq * nq);
  }

  std::optional<Point> known_minimizer() const override { return z_; }

  std::optional<Point> prox(const Point& w, double t) const override {
    if (space_.p != 2.0) return std::nullopt;
    std::vector<double> c(space_.dim);
    for (std::size_t i = 0; i < c.size(); ++i)
      c[i] = (w.c[i] + t * z_.c[i]) / (1.0 + t);
    return Point(space_, std::move(c));
  }

  bool smooth() const override { return true; }
  DualPoint gradient(const Point& x) const override {
    return duality_map(sub(x, z_));
  }
  bool hessian_available() const override { return true; }
  void accumulate_hessian(const Point& x, double coeff,
                          Eigen::MatrixXd& H) const override {
    const double p = space_.p;
    const auto n = static_cast<Eigen::Index>(space_.dim);
    if (p == 2.0) {  // exact: the Hessian of half the Euclidean square
      H += coeff * Eigen::MatrixXd::Identity(n, n);
      return;
    }
    const Point v = sub(x, z_);
    const double nv = norm(v);
    if (nv < 1e-12) {
      // Curvature surrogate at the center, where the true second derivative
      // of the p-norm square is direction dependent; the damped line search
      // in the solvers compensates for the inexactness.
      H += coeff * Eigen::MatrixXd::Identity(n, n);
      return;
    }
    Eigen::VectorXd phi(n);
    Eigen::VectorXd diag(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double a = std::abs(v.c[static_cast<std::size_t>(i)]);
      const double si = sgn(v.c[static_cast<std::size_t>(i)]);
      phi(i) = (a == 0.0) ? 0.0 : std::pow(a, p - 1.0) * si;
      // |v_i|^{p-2} blows up at 0 for p < 2; clamp the coordinate away
      // from zero to keep the surrogate curvature finite.
      const double safe_a = (p < 2.0) ? std::max(a, 1e-8 * nv) : a;
      diag(i) = std::pow(safe_a, p - 2.0);
    }
    const double c1 = (2.0 - p) * std::pow(nv, 2.0 - 2.0 * p);
    const double c2 = (p - 1.0) * std::pow(nv, 2.0 - p);
    H += coeff * (c1 * (phi * phi.transpose()) +
                  c2 * Eigen::MatrixXd(diag.asDiagonal()));
  }

 protected:
  ExtendedReal do_eval(const Point& x) const override {
    const double n = norm(sub(x, z_));
    return ExtendedReal(0.5 * n * n);
  }

  SubdiffStructure do_subdiff(const Point& x) const override {
    return SubdiffStructure::singleton(space_, duality_map(sub(x, z_)).c);
  }

 private:
  Point z_;
};

// --- sum of absolute values ------------------------------------------------------

class AbsSumFunction final : public ConvexFunction {
 public:
  explicit AbsSumFunction(const SpaceSpec& s)
      : ConvexFunction(FnKind::AbsSum, s) {}

  std::optional<ExtendedReal> conjugate(const DualPoint& xs) const override {
    for (double v : xs.c) {
      if (std::abs(v) > 1.0 + Tolerances::unit_ball_slack) {
        return ExtendedReal::infinity();
      }
    }
    return ExtendedReal(0.0);
  }

  std::optional<Point> known_minimizer() const override {
    return Point(space_, std::vector<double>(space_.dim, 0.0));
  }

  std::optional<Point> prox(const Point& w, double t) const override {
    std::vector<double> c(space_.dim);
    for (std::size_t i = 0; i < c.size(); ++i) {
      c[i] = sgn(w.c[i]) * std::max(std::abs(w.c[i]) - t, 0.0);
    }
    return Point(space_, std::move(c));
  }

  std::vector<Point> probe_points(const Point& x) const override {
    std::vector<Point> out;
    out.emplace_back(space_, std::vector<double>(space_.dim, 0.0));
    if (space_.dim <= 40) {
      for (std::size_t i = 0; i < space_.dim; ++i) {
        std::vector<double> c = x.c;
        c[i] = 0.0;
        out.emplace_back(space_, std::move(c));
        std::vector<double> d = x.c;
        d[i] = -d[i];
        out.emplace_back(space_, std::move(d));
      }
    }
    return out;
  }

 protected:
  ExtendedReal do_eval(const Point& x) const override {
    double s = 0.0;
    for (double v : x.c) s += std::abs(v);
    return ExtendedReal(s);
  }

  SubdiffStructure do_subdiff(const Point& x) const override {
    std::vector<double> base(space_.dim), lo(space_.dim), hi(space_.dim);
    for (std::size_t i = 0; i < space_.dim; ++i) {
      if (x.c[i] == 0.0) {
        base[i] = 0.0;
        lo[i] = -1.0;
        hi[i] = 1.0;
      } else {
        base[i] = sgn(x.c[i]);
        lo[i] = hi[i] = 0.0;
      }
    }
    return SubdiffStructure::interval_box(space_, std::move(base),
                                          std::move(lo), std::move(hi));
  }
};

// --- pointwise max of affine pieces ----------------------------------------------

class MaxAffineFunction final : public ConvexFunction {
 public:
  MaxAffineFunction(const SpaceSpec& s,
                    std::vector<std::vector<double>> slopes,
                    std::vector<double> intercepts)
      : ConvexFunction(FnKind::MaxAffine, s),
        slopes_(std::move(slopes)),
        intercepts_(std::move(intercepts)) {
    if (slopes_.empty() || slopes_.size() != intercepts_.size()) {
      throw InputError("max-affine: needs matching, nonempty slope and "
                       "intercept lists");
    }
    for (const auto& a : slopes_) {
      if (a.size() != space_.dim) {
        throw InputError("max-affine: slope dimension mismatch");
      }
    }
    // Bounded below exactly when 0 lies in the convex hull of the slopes.
    const auto origin = std::vector<double>(space_.dim, 0.0);
    const SubdiffStructure hull =
        SubdiffStructure::hull(space_, origin, slopes_);
    unbounded_ = !structure_contains(hull, origin, 1e-9);
  }

  const std::vector<std::vector<double>>& slopes() const { return slopes_; }
  const std::vector<double>& intercepts() const { return intercepts_; }

  bool known_unbounded_below() const override { return unbounded_; }

 protected:
  ExtendedReal do_eval(const Point& x) const override {
    return ExtendedReal(max_value(x));
  }

  SubdiffStructure do_subdiff(const Point& x) const override {
    const double m = max_value(x);
    const double tie = Tolerances::fitz_active_tie * (1.0 + std::abs(m));
    std::vector<std::vector<double>> active;
    for (std::size_t k = 0; k < slopes_.size(); ++k) {
      if (piece_value(k, x) >= m - tie) active.push_back(slopes_[k]);
    }
    if (active.size() == 1) {
      return SubdiffStructure::singleton(space_, active.front());
    }
    return SubdiffStructure::hull(
        space_, std::vector<double>(space_.dim, 0.0), std::move(active));
  }

 private:
  double piece_value(std::size_t k, const Point& x) const {
    double v = intercepts_[k];
    for (std::size_t i = 0; i < space_.dim; ++i) v += slopes_[k][i] * x.c[i];
    return v;
  }
  double max_value(const Point& x) const {
    double m = -kInf;
    for (std::size_t k = 0; k < slopes_.size(); ++k)
      m = std::max(m, piece_value(k, x));
    return m;
  }

  std::vector<std::vector<double>> slopes_;
  std::vector<double> intercepts_;
  bool unbounded_ = false;
};

// --- indicator of a coordinate box ------------------------------------------------

class IndicatorBoxFunction final : public ConvexFunction {
 public:
  IndicatorBoxFunction(const SpaceSpec& s, std::vector<double> lo,
                       std::vector<double> hi)
      : ConvexFunction(FnKind::IndicatorBox, s),
        lo_(std::move(lo)),
        hi_(std::move(hi)) {
    if (lo_.size() != space_.dim || hi_.size() != space_.dim) {
      throw InputError("indicator-box: bound dimension mismatch");
    }
    for (std::size_t i = 0; i < space_.dim; ++i) {
      if (std::isnan(lo_[i]) || std::isnan(hi_[i]) || lo_[i] > hi_[i] ||
          lo_[i] == kInf || hi_[i] == -kInf) {
        throw InputError("indicator-box: bounds must satisfy lo <= hi");
      }
    }
  }

  const std::vector<double>& lower() const { return lo_; }
  const std::vector<double>& upper() const { return hi_; }

  Point clamp_into(const Point& x) const {
    std::vector<double> c(space_.dim);
    for (std::size_t i = 0; i < space_.dim; ++i) {
      double v = x.c[i];
      if (std::isfinite(lo_[i])) v = std::max(v, lo_[i]);
      if (std::isfinite(hi_[i])) v = std::min(v, hi_[i]);
      c[i] = v;
    }
    return Point(space_, std::move(c));
  }

  std::optional<ExtendedReal> conjugate(const DualPoint& xs) const override {
    // Support function of the box.
    double s = 0.0;
    for (std::size_t i = 0; i < space_.dim; ++i) {
      const double y = xs.c[i];
      if (y > 0.0) {
        if (!std::isfinite(hi_[i])) return ExtendedReal::infinity();
        s += y * hi_[i];
      } else if (y < 0.0) {
        if (!std::isfinite(lo_[i])) return ExtendedReal::infinity();
        s += y * lo_[i];
      }
    }
    return ExtendedReal(s);
  }

  std::optional<double> known_infimum() const override { return 0.0; }
  std::optional<Point> known_minimizer() const override {
    return finite_point_;
  }

  std::optional<Point> prox(const Point& w, double) const override {
    return clamp_into(w);
  }

  std::vector<Point> probe_points(const Point& x) const override {
    std::vector<Point> out;
    out.push_back(clamp_into(x));
    if (space_.dim <= 40) {
      for (std::size_t i = 0; i < space_.dim; ++i) {
        if (std::isfinite(lo_[i])) {
          Point p = clamp_into(x);
          p.c[i] = lo_[i];
          out.push_back(std::move(p));
        }
        if (std::isfinite(hi_[i])) {
          Point p = clamp_into(x);
          p.c[i] = hi_[i];
          out.push_back(std::move(p));
        }
      }
    }
    return out;
  }

 protected:
  ExtendedReal do_eval(const Point& x) const override {
    for (std::size_t i = 0; i < space_.dim; ++i) {
      if (x.c[i] < lo_[i] || x.c[i] > hi_[i]) return ExtendedReal::infinity();
    }
    return ExtendedReal(0.0);
  }

  SubdiffStructure do_subdiff(const Point& x) const override {
    if (!do_eval(x).finite()) return SubdiffStructure::empty(space_);
    std::vector<double> base(space_.dim, 0.0), lo(space_.dim), hi(space_.dim);
    for (std::size_t i = 0; i < space_.dim; ++i) {
      const bool at_lo = (x.c[i] == lo_[i]);
      const bool at_hi = (x.c[i] == hi_[i]);
      lo[i] = at_lo ? -kInf : 0.0;
      hi[i] = at_hi ? kInf : 0.0;
    }
    return SubdiffStructure::interval_box(space_, std::move(base),
                                          std::move(lo), std::move(hi));
  }

 private:
  std::vector<double> lo_, hi_;
};

// --- indicator of the norm ball ----------------------------------------------------

class IndicatorBallFunction final : public ConvexFunction {
 public:
  IndicatorBallFunction(const SpaceSpec& s, double radius)
      : ConvexFunction(FnKind::IndicatorBall, s), r_(radius) {
    if (!(std::isfinite(r_)) || r_ <= 0.0) {
      throw InputError("indicator-ball: radius must be positive and finite");
    }
  }

  double radius() const { return r_; }

  std::optional<ExtendedReal> conjugate(const DualPoint& xs) const override {
    return ExtendedReal(r_ * norm(xs));
  }

  std::optional<double> known_infimum() const override { return 0.0; }
  std::optional<Point> known_minimizer() const override {
    return Point(space_, std::vector<double>(space_.dim, 0.0));
  }

  std::optional<Point> prox(const Point& w, double) const override {
    if (space_.p != 2.0) return std::nullopt;  // radial projection needs p = 2
    const double n = lr_norm(w.c, 2.0);
    if (n <= r_) return w;
    return scale(r_ / n, w);
  }

 protected:
  ExtendedReal do_eval(const Point& x) const override {
    return norm(x) <= r_ * (1.0 + 1e-12) ? ExtendedReal(0.0)
                                         : ExtendedReal::infinity();
  }

  SubdiffStructure do_subdiff(const Point& x) const override {
    const double n = norm(x);
    const double edge = 1e-9 * (1.0 + r_);
    if (n > r_ + edge) return SubdiffStructure::empty(space_);
    if (n < r_ - edge) {
      return SubdiffStructure::singleton(
          space_, std::vector<double>(space_.dim, 0.0));
    }
    // Boundary: the normal cone is the ray spanned by the outward normal,
    // which for the smooth l_p ball points along |x_i|^{p-1} sgn(x_i).
    std::vector<double> dir(space_.dim);
    for (std::size_t i = 0; i < space_.dim; ++i) {
      const double a = std::abs(x.c[i]);
      dir[i] = (a == 0.0) ? 0.0 : std::pow(a, space_.p - 1.0) * sgn(x.c[i]);
    }
    return SubdiffStructure::ray(space_,
                                 std::vector<double>(space_.dim, 0.0),
                                 std::move(dir));
  }

 private:
  double r_;
};

// --- affine ------------------------------------------------------------------------

class AffineFunction final : public ConvexFunction {
 public:
  AffineFunction(const SpaceSpec& s, std::vector<double> slope,
                 double intercept)
      : ConvexFunction(FnKind::Affine, s),
        a_(std::move(slope)),
        b_(intercept) {
    if (a_.size() != space_.dim) {
      throw InputError("affine: slope dimension mismatch");
    }
  }

  const std::vector<double>& slope() const { return a_; }
  double intercept() const { return b_; }

  std::optional<ExtendedReal> conjugate(const DualPoint& xs) const override {
    double scale = 1.0;
    for (double v : a_) scale = std::max(scale, std::abs(v));
    for (std::size_t i = 0; i < space_.dim; ++i) {
      if (std::abs(xs.c[i] - a_[i]) > 1e-12 * scale) {
        return ExtendedReal::infinity();
      }
    }
    return ExtendedReal(-b_);
  }

  bool known_unbounded_below() const override {
    for (double v : a_)
      if (v != 0.0) return true;
    return false;
  }

  std::optional<Point> known_minimizer() const override {
    if (known_unbounded_below()) return std::nullopt;
    return Point(space_, std::vector<double>(space_.dim, 0.0));
  }

  std::optional<Point> prox(const Point& w, double t) const override {
    std::vector<double> c(space_.dim);
    for (std::size_t i = 0; i < space_.dim; ++i) c[i] = w.c[i] - t * a_[i];
    return Point(space_, std::move(c));
  }

  bool smooth() const override { return true; }
  DualPoint gradient(const Point&) const override {
    return DualPoint(space_, a_);
  }
  bool hessian_available() const override { return true; }
  void accumulate_hessian(const Point&, double, Eigen::MatrixXd&) const
      override {}

 protected:
  ExtendedReal do_eval(const Point& x) const override {
    double v = b_;
    for (std::size_t i = 0; i < space_.dim; ++i) v += a_[i] * x.c[i];
    return ExtendedReal(v);
  }

  SubdiffStructure do_subdiff(const Point&) const override {
    return SubdiffStructure::singleton(space_, a_);
  }

 private:
  std::vector<double> a_;
  double b_;
};

}  // namespace

// --- sum ------------------------------------------------------------------------

namespace {

class ScaledFunction;  // forward declaration for the flattener

// Quadratic-plus-affine accumulator used when partitioning sum terms.
struct QuadPart {
  Eigen::MatrixXd M;
  Eigen::VectorXd lin;
  double cst = 0.0;
  bool any = false;

  explicit QuadPart(std::size_t dim)
      : M(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim),
                                static_cast<Eigen::Index>(dim))),
        lin(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim))) {}

  // True when M is (numerically exactly) m * Identity; m may be 0.
  bool identity_multiple(double* m) const {
    const double d0 = M(0, 0);
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
      for (Eigen::Index j = 0; j < M.cols(); ++j) {
        const double want = (i == j) ? d0 : 0.0;
        if (M(i, j) != want) return false;
      }
    }
    *m = d0;
    return true;
  }
};

struct Partition {
  QuadPart quad;
  // Terms not absorbed into the quadratic accumulator.
  std::vector<FlatTerm> others;

  explicit Partition(std::size_t dim) : quad(dim) {}
};

void flatten_into(std::vector<FlatTerm>& out, double coeff,
                  const ConvexFnPtr& f);

// Splits the flattened terms of f into an explicit quadratic/affine part and
// the remaining leaves.  Half squared norms around a center only fold in
// when the space is Euclidean (p = 2).
Partition partition_terms(const ConvexFunction& f) {
  std::vector<FlatTerm> terms;
  // Collect this function's own flattened terms.  The helper needs shared
  // ownership of children, which sums and wrappers store anyway.
  flatten_into(terms, 1.0, f.shared_from_this());
  Partition part(f.space().dim);
  for (const auto& t : terms) {
    switch (t.leaf->kind()) {
      case FnKind::Quadratic: {
        const auto* q = static_cast<const QuadraticFunction*>(t.leaf.get());
        part.quad.M += t.coeff * q->matrix();
        part.quad.lin += t.coeff * q->linear();
        part.quad.cst += t.coeff * q->constant();
        part.quad.any = true;
        break;
      }
      case FnKind::Affine: {
        const auto* a = static_cast<const AffineFunction*>(t.leaf.get());
        part.quad.lin += t.coeff * to_eig(a->slope());
        part.quad.cst += t.coeff * a->intercept();
        part.quad.any = true;
        break;
      }
      case FnKind::PNormSquaredHalf:
      case FnKind::ShiftedPNormSquaredHalf: {
        if (t.leaf->space().p == 2.0) {
          const auto* s =
              static_cast<const PNormSquaredHalfFunction*>(t.leaf.get());
          const Eigen::VectorXd z = to_eig(s->center().c);
          const auto n = static_cast<Eigen::Index>(t.leaf->space().dim);
          part.quad.M += t.coeff * Eigen::MatrixXd::Identity(n, n);
          part.quad.lin -= t.coeff * z;
          part.quad.cst += 0.5 * t.coeff * z.squaredNorm();
          part.quad.any = true;
        } else {
          part.others.push_back(t);
        }
        break;
      }
      default:
        part.others.push_back(t);
    }
  }
  return part;
}

class SumFunction : public ConvexFunction {
 public:
  SumFunction(FnKind kind, const SpaceSpec& s, std::vector<ConvexFnPtr> parts)
      : ConvexFunction(kind, s), parts_(std::move(parts)) {
    if (parts_.empty()) throw InputError("sum: needs at least one part");
    for (const auto& p : parts_) {
      require_same_space(space_, p->space(), "sum part");
    }
  }

  const std::vector<ConvexFnPtr>& parts() const { return parts_; }

  std::optional<ExtendedReal> conjugate(const DualPoint& xs) const override {
    // Closed form only when at most one non-affine term remains after
    // folding: (c*g + <a,.> + b)*(y) = c * g*((y - a)/c) - b.
    Partition part = partition_terms(*this);
    double m = 0.0;
    if (!part.quad.identity_multiple(&m) || m != 0.0) return std::nullopt;
    const std::vector<double> a = to_vec(part.quad.lin);
    const double b = part.quad.cst;
    if (part.others.empty()) {
      double scale = 1.0;
      for (double v : a) scale = std::max(scale, std::abs(v));
      for (std::size_t i = 0; i < space_.dim; ++i) {
        if (std::abs(xs.c[i] - a[i]) > 1e-12 * scale) {
          return ExtendedReal::infinity();
        }
      }
      return ExtendedReal(-b);
    }
    if (part.others.size() != 1) return std::nullopt;
    const double c = part.others.front().coeff;
    std::vector<double> shifted(space_.dim);
    for (std::size_t i = 0; i < space_.dim; ++i)
      shifted[i] = (xs.c[i] - a[i]) / c;
    const auto inner =
        part.others.front().leaf->conjugate(DualPoint(space_, shifted));
    if (!inner) return std::nullopt;
    if (!inner->finite()) return ExtendedReal::infinity();
    return ExtendedReal(c * inner->value() - b);
  }

  std::optional<Point> known_minimizer() const override {
    Partition part = partition_terms(*this);
    if (part.others.empty()) {
      // Pure quadratic: pseudo-solve M x = -lin, detecting escape along
      // the kernel.
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(part.quad.M);
      const double emax = es.eigenvalues().cwiseAbs().maxCoeff();
      const double rank_tol = 1e-12 * (1.0 + emax);
      const Eigen::VectorXd w =
          es.eigenvectors().transpose() * (-part.quad.lin);
      Eigen::VectorXd sol = Eigen::VectorXd::Zero(w.size());
      for (Eigen::Index i = 0; i < w.size(); ++i) {
        if (es.eigenvalues()(i) > rank_tol) {
          sol(i) = w(i) / es.eigenvalues()(i);
        } else if (std::abs(w(i)) > 1e-9 * (1.0 + part.quad.lin.norm())) {
          return std::nullopt;
        }
      }
      return Point(space_, to_vec(es.eigenvectors() * sol));
    }
    if (part.others.size() != 1) return std::nullopt;
    const auto& other = part.others.front();
    double m = 0.0;
    if (!part.quad.identity_multiple(&m)) return std::nullopt;
    if (m > 0.0) {
      // argmin m/2 |x|^2 + <lin, x> + c g(x) = prox_{(c/m) g}(-lin / m).
      const Point u(space_, to_vec(-part.quad.lin / m));
      return other.leaf->prox(u, other.coeff / m);
    }
    // No curvature: closed form for a linear objective over a box.
    if (other.leaf->kind() == FnKind::IndicatorBox) {
      const auto* box =
          static_cast<const IndicatorBoxFunction*>(other.leaf.get());
      std::vector<double> c(space_.dim);
      for (std::size_t i = 0; i < space_.dim; ++i) {
        const double a = part.quad.lin(static_cast<Eigen::Index>(i));
        if (a > 0.0) {
          if (!std::isfinite(box->lower()[i])) return std::nullopt;
          c[i] = box->lower()[i];
        } else if (a < 0.0) {
          if (!std::isfinite(box->upper()[i])) return std::nullopt;
          c[i] = box->upper()[i];
        } else {
          c[i] = std::clamp(0.0, box->lower()[i], box->upper()[i]);
        }
      }
      return Point(space_, std::move(c));
    }
    return std::nullopt;
  }

  bool known_unbounded_below() const override {
    Partition part = partition_terms(*this);
    if (part.others.empty()) {
      return !known_minimizer().has_value();
    }
    double m = 0.0;
    if (part.others.size() == 1 && part.quad.identity_multiple(&m) &&
        m == 0.0 && part.others.front().leaf->kind() == FnKind::IndicatorBox) {
      const auto* box = static_cast<const IndicatorBoxFunction*>(
          part.others.front().leaf.get());
      for (std::size_t i = 0; i < space_.dim; ++i) {
        const double a = part.quad.lin(static_cast<Eigen::Index>(i));
        if (a > 0.0 && !std::isfinite(box->lower()[i])) return true;
        if (a < 0.0 && !std::isfinite(box->upper()[i])) return true;
      }
      return false;
    }
    return false;
  }

  std::optional<Point> prox(const Point& w, double t) const override {
    Partition part = partition_terms(*this);
    if (part.others.empty()) {
      const auto n = static_cast<Eigen::Index>(space_.dim);
      const Eigen::MatrixXd A =
          Eigen::MatrixXd::Identity(n, n) + t * part.quad.M;
      const Eigen::VectorXd rhs = to_eig(w.c) - t * part.quad.lin;
      return Point(space_, to_vec(A.ldlt().solve(rhs)));
    }
    if (part.others.size() != 1) return std::nullopt;
    double m = 0.0;
    if (!part.quad.identity_multiple(&m)) return std::nullopt;
    // prox of t*(m/2 |x|^2 + <lin,x> + c g): shrink, shift, then prox of g.
    const double denom = 1.0 + t * m;
    std::vector<double> u(space_.dim);
    for (std::size_t i = 0; i < space_.dim; ++i) {
      u[i] = (w.c[i] - t * part.quad.lin(static_cast<Eigen::Index>(i))) /
             denom;
    }
    return part.others.front().leaf->prox(
        Point(space_, std::move(u)), t * part.others.front().coeff / denom);
  }

  bool smooth() const override {
    for (const auto& p : parts_)
      if (!p->smooth()) return false;
    return true;
  }

  DualPoint gradient(const Point& x) const override {
    DualPoint g(space_, std::vector<double>(space_.dim, 0.0));
    for (const auto& p : parts_) g = add(g, p->gradient(x));
    return g;
  }

  bool hessian_available() const override {
    for (const auto& p : parts_)
      if (!p->hessian_available()) return false;
    return true;
  }

  void accumulate_hessian(const Point& x, double coeff,
                          Eigen::MatrixXd& H) const override {
    for (const auto& p : parts_) p->accumulate_hessian(x, coeff, H);
  }

  std::vector<Point> probe_points(const Point& x) const override {
    std::vector<Point> out;
    for (const auto& p : parts_) {
      for (auto& pt : p->probe_points(x)) {
        out.push_back(std::move(pt));
        if (out.size() >= 200) return out;
      }
    }
    return out;
  }

 protected:
  ExtendedReal do_eval(const Point& x) const override {
    ExtendedReal v(0.0);
    for (const auto& p : parts_) {
      v = v + p->eval(x);
      if (!v.finite()) return v;
    }
    return v;
  }

  SubdiffStructure do_subdiff(const Point& x) const override {
    SubdiffStructure acc = parts_.front()->subdiff_structure(x);
    for (std::size_t i = 1; i < parts_.size(); ++i) {
      if (acc.is_empty()) return acc;
      acc = minkowski_sum(acc, parts_[i]->subdiff_structure(x));
    }
    return acc;
  }

  std::vector<ConvexFnPtr> parts_;
};

// --- scaled ---------------------------------------------------------------------

class ScaledFunction final : public ConvexFunction {
 public:
  ScaledFunction(double t, ConvexFnPtr inner)
      : ConvexFunction(FnKind::Scaled, inner->space()),
        t_(t),
        inner_(std::move(inner)) {
    if (!(std::isfinite(t_)) || t_ <= 0.0) {
      throw InputError("scaled: factor must be positive and finite");
    }
  }

  double factor() const { return t_; }
  const ConvexFnPtr& inner() const { return inner_; }

  std::optional<ExtendedReal> conjugate(const DualPoint& xs) const override {
    std::vector<double> c(space_.dim);
    for (std::size_t i = 0; i < space_.dim; ++i) c[i] = xs.c[i] / t_;
    const auto inner = inner_->conjugate(DualPoint(space_, std::move(c)));
    if (!inner) return std::nullopt;
    return *inner * t_;
  }

  std::optional<double> known_infimum() const override {
    if (auto v = inner_->known_infimum()) return t_ * *v;
    return std::nullopt;
  }
  std::optional<Point> known_minimizer() const override {
    return inner_->known_minimizer();
  }
  bool known_unbounded_below() const override {
    return inner_->known_unbounded_below();
  }
  std::optional<Point> prox(const Point& w, double s) const override {
    return inner_->prox(w, s * t_);
  }
  bool smooth() const override { return inner_->smooth(); }
  DualPoint gradient(const Point& x) const override {
    return scale(t_, inner_->gradient(x));
  }
  bool hessian_available() const override {
    return inner_->hessian_available();
  }
  void accumulate_hessian(const Point& x, double coeff,
                          Eigen::MatrixXd& H) const override {
    inner_->accumulate_hessian(x, coeff * t_, H);
  }
  std::vector<Point> probe_points(const Point& x) const override {
    return inner_->probe_points(x);
  }

 protected:
  ExtendedReal do_eval(const Point& x) const override {
    return inner_->eval(x) * t_;
  }
  SubdiffStructure do_subdiff(const Point& x) const override {
    return scale_structure(inner_->subdiff_structure(x), t_);
  }

 private:
  double t_;
  ConvexFnPtr inner_;
};

// --- trapezoid discretization of an integral functional ---------------------------

// Embeds a structure over the inner space into the stacked space at a node
// offset; all other coordinates get width-zero entries.
SubdiffStructure embed_structure(const SubdiffStructure& s,
                                 std::size_t offset, const SpaceSpec& full) {
  using Tag = SubdiffStructure::Tag;
  const std::size_t m = s.space.dim;
  auto pad = [&](const std::vector<double>& v, double fill) {
    std::vector<double> out(full.dim, fill);
    for (std::size_t i = 0; i < m; ++i) out[offset + i] = v[i];
    return out;
  };
  switch (s.tag) {
    case Tag::Empty:
      return SubdiffStructure::empty(full);
    case Tag::MembershipOnly:
      return SubdiffStructure::membership_only(full);
    case Tag::Singleton:
      return SubdiffStructure::singleton(full, pad(s.base, 0.0));
    case Tag::IntervalBox:
      return SubdiffStructure::interval_box(full, pad(s.base, 0.0),
                                            pad(s.lo, 0.0), pad(s.hi, 0.0));
    case Tag::Hull: {
      std::vector<std::vector<double>> gens;
      gens.reserve(s.gens.size());
      for (const auto& g : s.gens) gens.push_back(pad(g, 0.0));
      return SubdiffStructure::hull(full, pad(s.base, 0.0), std::move(gens));
    }
    case Tag::Ray:
      return SubdiffStructure::ray(full, pad(s.base, 0.0), pad(s.dir, 0.0));
    case Tag::Composite: {
      SubdiffStructure out;
      out.tag = Tag::Composite;
      out.space = full;
      for (const auto& p : s.parts)
        out.parts.push_back(embed_structure(p, offset, full));
      return out;
    }
  }
  throw Error("embed_structure: unreachable");
}

class DiscretizedIntegralFunction final : public ConvexFunction {
 public:
  static SpaceSpec stacked_space(const ConvexFnPtr& inner, int nodes) {
    if (nodes < 2) {
      throw InputError("discretized-integral: needs at least 2 nodes");
    }
    return SpaceSpec(inner->space().dim * static_cast<std::size_t>(nodes),
                     inner->space().p);
  }

  DiscretizedIntegralFunction(ConvexFnPtr inner, int nodes, double horizon)
      : ConvexFunction(FnKind::DiscretizedIntegral,
                       stacked_space(inner, nodes)),
        inner_(std::move(inner)),
        nodes_(nodes),
        horizon_(horizon) {
    if (!(std::isfinite(horizon_)) || horizon_ <= 0.0) {
      throw InputError("discretized-integral: horizon must be positive");
    }
    const double h = horizon_ / static_cast<double>(nodes_ - 1);
    weights_.resize(static_cast<std::size_t>(nodes_), h);
    weights_.front() = 0.5 * h;
    weights_.back() = 0.5 * h;
  }

  const ConvexFnPtr& inner() const { return inner_; }
  int nodes() const { return nodes_; }
  double horizon() const { return horizon_; }
  double weight(std::size_t k) const { return weights_[k]; }

  Point node_block(const Point& x, std::size_t k) const {
    const std::size_t m = inner_->space().dim;
    std::vector<double> c(x.c.begin() + static_cast<std::ptrdiff_t>(k * m),
                          x.c.begin() +
                              static_cast<std::ptrdiff_t>((k + 1) * m));
    return Point(inner_->space(), std::move(c));
  }

  std::optional<ExtendedReal> conjugate(const DualPoint& xs) const override {
    // Separable across nodes: sum of w_k * g*(y_k / w_k).
    const std::size_t m = inner_->space().dim;
    ExtendedReal total(0.0);
    for (std::size_t k = 0; k < weights_.size(); ++k) {
      std::vector<double> yk(m);
      for (std::size_t i = 0; i < m; ++i)
        yk[i] = xs.c[k * m + i] / weights_[k];
      const auto inner_val =
          inner_->conjugate(DualPoint(inner_->space(), std::move(yk)));
      if (!inner_val) return std::nullopt;
      total = total + *inner_val * weights_[k];
      if (!total.finite()) return ExtendedReal::infinity();
    }
    return total;
  }

  std::optional<double> known_infimum() const override {
    if (auto v = inner_->known_infimum()) return horizon_ * *v;
    return std::nullopt;
  }

  std::optional<Point> known_minimizer() const override {
    const auto m = inner_->known_minimizer();
    if (!m) return std::nullopt;
    return tile(m->c);
  }

  bool known_unbounded_below() const override {
    return inner_->known_unbounded_below();
  }

  std::optional<Point> prox(const Point& w, double t) const override {
    const std::size_t m = inner_->space().dim;
    std::vector<double> out(space_.dim);
    for (std::size_t k = 0; k < weights_.size(); ++k) {
      const auto block = inner_->prox(node_block(w, k), t * weights_[k]);
      if (!block) return std::nullopt;
      for (std::size_t i = 0; i < m; ++i) out[k * m + i] = block->c[i];
    }
    return Point(space_, std::move(out));
  }

  bool smooth() const override { return inner_->smooth(); }

  DualPoint gradient(const Point& x) const override {
    const std::size_t m = inner_->space().dim;
    std::vector<double> g(space_.dim);
    for (std::size_t k = 0; k < weights_.size(); ++k) {
      const DualPoint gk = inner_->gradient(node_block(x, k));
      for (std::size_t i = 0; i < m; ++i) g[k * m + i] = weights_[k] * gk.c[i];
    }
    return DualPoint(space_, std::move(g));
  }

  bool hessian_available() const override {
    return inner_->hessian_available();
  }

  void accumulate_hessian(const Point& x, double coeff,
                          Eigen::MatrixXd& H) const override {
    const auto m = static_cast<Eigen::Index>(inner_->space().dim);
    Eigen::MatrixXd Hk(m, m);
    for (std::size_t k = 0; k < weights_.size(); ++k) {
      Hk.setZero();
      inner_->accumulate_hessian(node_block(x, k), coeff * weights_[k], Hk);
      H.block(static_cast<Eigen::Index>(k) * m,
              static_cast<Eigen::Index>(k) * m, m, m) += Hk;
    }
  }

 protected:
  ExtendedReal do_eval(const Point& x) const override {
    ExtendedReal total(0.0);
    for (std::size_t k = 0; k < weights_.size(); ++k) {
      total = total + inner_->eval(node_block(x, k)) * weights_[k];
      if (!total.finite()) return total;
    }
    return total;
  }

  SubdiffStructure do_subdiff(const Point& x) const override {
    SubdiffStructure acc = embed_structure(
        scale_structure(inner_->subdiff_structure(node_block(x, 0)),
                        weights_[0]),
        0, space_);
    const std::size_t m = inner_->space().dim;
    for (std::size_t k = 1; k < weights_.size(); ++k) {
      if (acc.is_empty()) return acc;
      SubdiffStructure sk = inner_->subdiff_structure(node_block(x, k));
      if (sk.is_empty()) return SubdiffStructure::empty(space_);
      acc = minkowski_sum(
          acc, embed_structure(scale_structure(std::move(sk), weights_[k]),
                               k * m, space_));
    }
    return acc;
  }

 private:
  Point tile(const std::vector<double>& block) const {
    std::vector<double> c(space_.dim);
    const std::size_t m = inner_->space().dim;
    for (std::size_t k = 0; k < static_cast<std::size_t>(nodes_); ++k)
      for (std::size_t i = 0; i < m; ++i) c[k * m + i] = block[i];
    return Point(space_, std::move(c));
  }

  ConvexFnPtr inner_;
  int nodes_;
  double horizon_;
  std::vector<double> weights_;
};

// --- regularized objective ---------------------------------------------------------

class PsiFunction final : public SumFunction {
 public:
  PsiFunction(std::vector<ConvexFnPtr> parts, PsiView view)
      : SumFunction(FnKind::RegularizedObjective, view.z.space,
                    std::move(parts)),
        view_(std::move(view)) {}

  const PsiView& view() const { return view_; }

 private:
  PsiView view_;
};

void flatten_into(std::vector<FlatTerm>& out, double coeff,
                  const ConvexFnPtr& f) {
  if (const auto* sc = dynamic_cast<const ScaledFunction*>(f.get())) {
    flatten_into(out, coeff * sc->factor(), sc->inner());
    return;
  }
  if (const auto* sum = dynamic_cast<const SumFunction*>(f.get())) {
    for (const auto& p : sum->parts()) flatten_into(out, coeff, p);
    return;
  }
  out.push_back(FlatTerm{coeff, f});
}

}  // namespace

std::vector<FlatTerm> flatten_terms(const ConvexFnPtr& f) {
  std::vector<FlatTerm> out;
  flatten_into(out, 1.0, f);
  return out;
}

std::optional<PsiView> as_psi(const ConvexFunction& g) {
  if (const auto* psi = dynamic_cast<const PsiFunction*>(&g)) {
    return psi->view();
  }
  return std::nullopt;
}

std::optional<MaxAffineView> as_max_affine(const ConvexFunction& f) {
  if (const auto* ma = dynamic_cast<const MaxAffineFunction*>(&f)) {
    return MaxAffineView{ma->slopes(), ma->intercepts()};
  }
  return std::nullopt;
}

std::optional<BoxView> as_indicator_box(const ConvexFunction& f) {
  if (const auto* box = dynamic_cast<const IndicatorBoxFunction*>(&f)) {
    return BoxView{box->lower(), box->upper()};
  }
  return std::nullopt;
}

// --- factories ----------------------------------------------------------------------

namespace {

template <typename T>
void run_finalize(std::shared_ptr<T>& fn, Point finite_point) {
  fn->finalize(std::move(finite_point));
}

Point default_box_point(const SpaceSpec& s, const std::vector<double>& lo,
                        const std::vector<double>& hi) {
  std::vector<double> c(s.dim, 0.0);
  for (std::size_t i = 0; i < s.dim; ++i) {
    double v = 0.0;
    if (std::isfinite(lo[i])) v = std::max(v, lo[i]);
    if (std::isfinite(hi[i])) v = std::min(v, hi[i]);
    c[i] = v;
  }
  return Point(s, std::move(c));
}

}  // namespace

ConvexFnPtr make_quadratic(const SpaceSpec& s, const Eigen::MatrixXd& M,
                           std::optional<std::vector<double>> shift) {
  Eigen::VectorXd b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(s.dim));
  if (shift) {
    if (shift->size() != s.dim) {
      throw InputError("quadratic: shift dimension mismatch");
    }
    b = to_eig(*shift);
  }
  // 0.5 (x-b)' M (x-b) = 0.5 x'Mx - (Mb)'x + 0.5 b'Mb.
  auto fn = std::make_shared<QuadraticFunction>(s, M, Eigen::VectorXd(-M * b),
                                                0.5 * b.dot(M * b));
  run_finalize(fn, Point(s, to_vec(b)));
  return fn;
}

ConvexFnPtr make_quadratic_general(const SpaceSpec& s, const Eigen::MatrixXd& M,
                                   std::vector<double> lin, double cst) {
  auto fn = std::make_shared<QuadraticFunction>(s, M, to_eig(lin), cst);
  run_finalize(fn, Point(s, std::vector<double>(s.dim, 0.0)));
  return fn;
}

ConvexFnPtr make_pnorm_squared_half(const SpaceSpec& s) {
  auto fn = std::make_shared<PNormSquaredHalfFunction>(
      FnKind::PNormSquaredHalf, s,
      Point(s, std::vector<double>(s.dim, 0.0)));
  run_finalize(fn, Point(s, std::vector<double>(s.dim, 0.0)));
  return fn;
}

ConvexFnPtr make_shifted_pnorm_squared_half(const Point& z) {
  auto fn = std::make_shared<PNormSquaredHalfFunction>(
      FnKind::ShiftedPNormSquaredHalf, z.space, z);
  run_finalize(fn, z);
  return fn;
}

ConvexFnPtr make_abs_sum(const SpaceSpec& s) {
  auto fn = std::make_shared<AbsSumFunction>(s);
  run_finalize(fn, Point(s, std::vector<double>(s.dim, 0.0)));
  return fn;
}

ConvexFnPtr make_max_affine(const SpaceSpec& s,
                            std::vector<std::vector<double>> slopes,
                            std::vector<double> intercepts) {
  auto fn = std::make_shared<MaxAffineFunction>(s, std::move(slopes),
                                                std::move(intercepts));
  run_finalize(fn, Point(s, std::vector<double>(s.dim, 0.0)));
  return fn;
}

ConvexFnPtr make_indicator_box(const SpaceSpec& s, std::vector<double> lo,
                               std::vector<double> hi) {
  auto fn = std::make_shared<IndicatorBoxFunction>(s, lo, hi);
  run_finalize(fn, default_box_point(s, lo, hi));
  return fn;
}

ConvexFnPtr make_indicator_ball(const SpaceSpec& s, double radius) {
  auto fn = std::make_shared<IndicatorBallFunction>(s, radius);
  run_finalize(fn, Point(s, std::vector<double>(s.dim, 0.0)));
  return fn;
}

ConvexFnPtr make_affine(const SpaceSpec& s, std::vector<double> slope,
                        double intercept) {
  auto fn = std::make_shared<AffineFunction>(s, std::move(slope), intercept);
  run_finalize(fn, Point(s, std::vector<double>(s.dim, 0.0)));
  return fn;
}

ConvexFnPtr make_zero(const SpaceSpec& s) {
  return make_affine(s, std::vector<double>(s.dim, 0.0), 0.0);
}

ConvexFnPtr make_sum(std::vector<ConvexFnPtr> parts) {
  if (parts.empty()) throw InputError("sum: needs at least one part");
  const SpaceSpec s = parts.front()->space();
  auto fn = std::make_shared<SumFunction>(FnKind::Sum, s, parts);
  // A common finite point must exist for the sum to be proper; try each
  // part's witness before giving up.
  std::vector<Point> candidates;
  for (const auto& p : parts) candidates.push_back(p->finite_point());
  std::vector<double> mean(s.dim, 0.0);
  for (const auto& c : candidates)
    for (std::size_t i = 0; i < s.dim; ++i)
      mean[i] += c.c[i] / static_cast<double>(candidates.size());
  candidates.emplace_back(s, std::move(mean));
  for (const auto& cand : candidates) {
    bool ok = true;
    for (const auto& p : parts) {
      if (!p->eval(cand).finite()) {
        ok = false;
        break;
      }
    }
    if (ok) {
      run_finalize(fn, cand);
      return fn;
    }
  }
  throw InputError("sum: improper (no common point of finite value found)");
}

ConvexFnPtr combine_sum(ConvexFnPtr a, ConvexFnPtr b) {
  return make_sum({std::move(a), std::move(b)});
}

ConvexFnPtr make_scaled(double t, ConvexFnPtr inner) {
  const Point witness = inner->finite_point();
  auto fn = std::make_shared<ScaledFunction>(t, std::move(inner));
  run_finalize(fn, witness);
  return fn;
}

ConvexFnPtr build_integral_functional(ConvexFnPtr inner, int nodes,
                                      double horizon) {
  const Point inner_witness = inner->finite_point();
  auto fn = std::make_shared<DiscretizedIntegralFunction>(std::move(inner),
                                                          nodes, horizon);
  std::vector<double> c(fn->space().dim);
  const std::size_t m = inner_witness.c.size();
  for (std::size_t k = 0; k < static_cast<std::size_t>(nodes); ++k)
    for (std::size_t i = 0; i < m; ++i) c[k * m + i] = inner_witness.c[i];
  run_finalize(fn, Point(fn->space(), std::move(c)));
  return fn;
}

ConvexFnPtr build_psi(ConvexFnPtr f, const Point& z, const DualPoint& zs,
                      double lambda) {
  require_same_space(f->space(), z.space, "regularized objective");
  require_same_space(f->space(), zs.space, "regularized objective");
  if (!(std::isfinite(lambda)) || lambda <= 0.0) {
    throw InputError(
        "regularized objective: the weight lambda must be positive");
  }
  std::vector<ConvexFnPtr> parts;
  parts.push_back(make_shifted_pnorm_squared_half(z));
  parts.push_back(make_scaled(lambda, f));
  std::vector<double> tilt(zs.c.size());
  for (std::size_t i = 0; i < tilt.size(); ++i) tilt[i] = -lambda * zs.c[i];
  parts.push_back(make_affine(f->space(), std::move(tilt), 0.0));
  PsiView view{f, z, zs, lambda};
  auto fn = std::make_shared<PsiFunction>(std::move(parts), std::move(view));
  run_finalize(fn, f->finite_point());
  return fn;
}

// --- free operations -----------------------------------------------------------------

SubdiffRepr subdiff(const ConvexFunction& f, const Point& x) {
  return materialize_subdiff(f.subdiff_structure(x), Tolerances::cone_radius);
}

MembershipResult subdiff_membership(const ConvexFunction& f, const Point& x,
                                    const DualPoint& xs,
                                    const SamplePlan& plan) {
  require_same_space(f.space(), x.space, "membership");
  require_same_space(f.space(), xs.space, "membership");
  MembershipResult res;
  res.plan = plan;

  const ExtendedReal fx = f.eval(x);
  const double scale =
      1.0 + (fx.finite() ? std::abs(fx.value()) : 0.0) + norm(xs);
  const double tol = 1e-9 * scale;

  if (!fx.finite()) {
    // x outside the effective domain: the subdifferential is empty and any
    // point of finite value witnesses the violation.
    res.holds = false;
    res.exact = true;
    res.witness = f.finite_point();
    res.violation = kInf;
    return res;
  }

  bool have_verdict = false;
  const SubdiffStructure structure = f.subdiff_structure(x);
  if (structure.descriptive() || structure.is_empty()) {
    res.holds = structure.is_empty() ? false
                                     : structure_contains(structure, xs.c,
                                                          std::max(tol, 1e-11));
    res.exact = true;
    have_verdict = true;
  } else if (const auto conj = f.conjugate(xs)) {
    // Fenchel-Young with equality: xs is a subgradient at x exactly when
    // f(x) + f*(xs) = <x, xs>.
    if (!conj->finite()) {
      res.holds = false;
    } else {
      const double gap = fx.value() + conj->value() - pairing(x, xs);
      res.holds = gap <= tol;
    }
    res.exact = true;
    have_verdict = true;
  }

  // Sampled pass: either the verdict itself (when no exact route exists) or
  // a witness search explaining a refutation.
  const bool need_samples = !have_verdict || !res.holds;
  if (need_samples) {
    const int count = plan.count > 0 ? plan.count : 512;
    const double radius =
        plan.radius > 0.0 ? plan.radius : 5.0 * (1.0 + norm(x));
    Rng rng(plan.seed);
    double best = 0.0;
    std::optional<Point> best_point;
    auto consider = [&](const Point& y) {
      const ExtendedReal fy = f.eval(y);
      if (!fy.finite()) return;
      const double viol =
          fx.value() + pairing(sub(y, x), xs) - fy.value();
      if (viol > best) {
        best = viol;
        best_point = y;
      }
    };
    for (int i = 0; i < count; ++i) {
      std::vector<double> c = rng.cube(f.space().dim, radius);
      for (std::size_t j = 0; j < c.size(); ++j) c[j] += x.c[j];
      consider(Point(f.space(), std::move(c)));
    }
    for (const auto& y : f.probe_points(x)) consider(y);
    consider(f.finite_point());
    if (!have_verdict) {
      res.holds = best <= tol;
      res.exact = false;
    }
    if (!res.holds && best > 0.0) {
      res.witness = best_point;
      res.violation = best;
    }
  }
  return res;
}

double convexity_check(const ConvexFunction& f, std::uint64_t seed, int pairs,
                       double radius) {
  Rng rng(seed);
  const SpaceSpec& s = f.space();
  const Point& anchor = f.finite_point();
  double worst = 0.0;

  auto draw_finite = [&]() -> std::optional<Point> {
    std::vector<double> c = rng.cube(s.dim, radius);
    for (std::size_t i = 0; i < s.dim; ++i) c[i] += anchor.c[i];
    Point y(s, std::move(c));
    // Shrink toward the finite anchor until the value is finite; the domain
    // is convex, so this terminates quickly for proper functions.
    for (int tries = 0; tries < 60; ++tries) {
      if (f.eval(y).finite()) return y;
      y = add(anchor, scale(0.5, sub(y, anchor)));
    }
    return std::nullopt;
  };

  for (int k = 0; k < pairs; ++k) {
    const auto ya = draw_finite();
    const auto yb = draw_finite();
    if (!ya || !yb) continue;
    const double fa = f.eval(*ya).value();
    const double fb = f.eval(*yb).value();
    for (double t : {0.25, 0.5, 0.75}) {
      const Point mid = add(scale(t, *ya), scale(1.0 - t, *yb));
      const ExtendedReal fm = f.eval(mid);
      if (!fm.finite()) {
        // A convex function is finite on segments between finite points.
        return kInf;
      }
      const double bound = t * fa + (1.0 - t) * fb;
      const double scale_here = scale_of({fa, fb, fm.value()});
      worst = std::max(worst, (fm.value() - bound) / scale_here);
    }
  }
  return worst;
}

double stationarity_residual(const ConvexFunction& f, const Point& x) {
  const SubdiffStructure s = f.subdiff_structure(x);
  if (s.is_empty()) return kInf;
  if (s.tag == SubdiffStructure::Tag::MembershipOnly) return kInf;
  const std::vector<double> g =
      nearest_element(s, std::vector<double>(f.space().dim, 0.0));
  return lr_norm(g, f.space().q);
}

}  // namespace monolab
