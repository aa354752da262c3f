#pragma once

#include <Eigen/Dense>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "monolab/rng.hpp"
#include "monolab/space.hpp"

namespace monolab {

// Extended real line [-inf excluded]: values are finite or +infinity.
// Minus infinity and NaN are rejected at construction, so arithmetic below
// never has to resolve (+inf) + (-inf).
class ExtendedReal {
 public:
  ExtendedReal() : v_(0.0) {}
  ExtendedReal(double v);  // implicit on purpose; validates the value
  static ExtendedReal infinity();

  bool finite() const;
  double value() const { return v_; }  // +inf when not finite

  ExtendedReal operator+(const ExtendedReal& o) const;
  ExtendedReal operator*(double t) const;  // t >= 0
  bool operator<(const ExtendedReal& o) const { return v_ < o.v_; }
  bool operator<=(const ExtendedReal& o) const { return v_ <= o.v_; }

 private:
  double v_;
};

// ---------------------------------------------------------------------------
// Subdifferential descriptions
// ---------------------------------------------------------------------------

// Exact structural description of a subdifferential set, used internally for
// nearest-element selection and Minkowski sums.  Every set is expressed as
//   { base + s : s in Block } (+ further blocks for Composite),
// where Block is a coordinate interval box or the convex hull of finitely
// many generators.
struct SubdiffStructure {
  enum class Tag {
    Empty,           // subdifferential is empty (point outside the domain)
    Singleton,       // exactly { base }
    IntervalBox,     // base + prod_i [lo_i, hi_i]  (entries may be +-inf)
    Hull,            // base + conv{ gens }
    Ray,             // base + { t * dir : t >= 0 }  (normal cone of a ball)
    Composite,       // Minkowski sum of the parts
    MembershipOnly,  // set exists but has no finite description here
  };

  Tag tag = Tag::Empty;
  SpaceSpec space;
  std::vector<double> base;
  std::vector<double> lo, hi;              // IntervalBox only
  std::vector<std::vector<double>> gens;   // Hull only
  std::vector<double> dir;                 // Ray only
  std::vector<SubdiffStructure> parts;     // Composite only

  static SubdiffStructure empty(const SpaceSpec& s);
  static SubdiffStructure singleton(const SpaceSpec& s,
                                    std::vector<double> base);
  static SubdiffStructure interval_box(const SpaceSpec& s,
                                       std::vector<double> base,
                                       std::vector<double> lo,
                                       std::vector<double> hi);
  static SubdiffStructure hull(const SpaceSpec& s, std::vector<double> base,
                               std::vector<std::vector<double>> gens);
  static SubdiffStructure ray(const SpaceSpec& s, std::vector<double> base,
                              std::vector<double> dir);
  static SubdiffStructure membership_only(const SpaceSpec& s);

  bool is_empty() const { return tag == Tag::Empty; }
  bool descriptive() const {
    return tag != Tag::Empty && tag != Tag::MembershipOnly;
  }
};

// base-offset and scaling of a structure; Minkowski sum with folding of
// compatible blocks (box+box merges, singletons fold into the base).
SubdiffStructure shift_structure(SubdiffStructure s,
                                 const std::vector<double>& delta);
SubdiffStructure scale_structure(SubdiffStructure s, double t);
SubdiffStructure minkowski_sum(const SubdiffStructure& a,
                               const SubdiffStructure& b);

// Element of the structure closest to `target`; distance is measured in the
// dual norm l_q for interval boxes (exact) and in l_2 for hulls (a valid
// member for any q; exact for q = 2).  Throws on Empty/MembershipOnly.
std::vector<double> nearest_element(const SubdiffStructure& s,
                                    const std::vector<double>& target);

// Exact membership test for descriptive structures (tolerance on the
// distance to the set).  Throws on MembershipOnly.
bool structure_contains(const SubdiffStructure& s,
                        const std::vector<double>& cand, double tol);

// Exact minimum of the linear form <c, v> over the structure: -infinity on
// unbounded descent directions (cone/box sides), +infinity for Empty.
// Throws on MembershipOnly.
double structure_support_min(const SubdiffStructure& s,
                             const std::vector<double>& c);

// Reported form of a subdifferential at a point.
struct SubdiffRepr {
  enum class Variant { Empty, Singleton, Polytope, MembershipOnly };
  Variant variant = Variant::Empty;
  std::vector<DualPoint> generators;  // 1 entry for Singleton
  // True when an unbounded normal-cone direction was cut off at a large
  // radius to produce finitely many generators.
  bool truncated = false;
};

// Materializes the public representation.  Interval boxes with more than
// `corner_cap` non-degenerate axes would need 2^axes corners and degrade to
// MembershipOnly instead.
SubdiffRepr materialize_subdiff(const SubdiffStructure& s,
                                double cone_radius, int corner_cap = 12);

// ---------------------------------------------------------------------------
// Convex function catalog
// ---------------------------------------------------------------------------

enum class FnKind {
  Quadratic,
  PNormSquaredHalf,
  ShiftedPNormSquaredHalf,  // internal building block: x -> 0.5*|x - z|_p^2
  AbsSum,
  MaxAffine,
  IndicatorBox,
  IndicatorBall,
  Affine,
  Sum,
  Scaled,
  DiscretizedIntegral,
  RegularizedObjective,  // 0.5*|x-z|^2 + lambda*(f(x) - <x, zs>)
};

std::string fn_kind_name(FnKind k);

class ConvexFunction;
using ConvexFnPtr = std::shared_ptr<const ConvexFunction>;

// How trustworthy the subdifferential/membership answers of a function are.
enum class OracleExactness { Exact, SampledOneSided };

// Proper convex lower-semicontinuous function on a SpaceSpec.  Instances are
// immutable and shared; all mutation happens at construction time, which also
// runs a properness check (a point of finite value must be exhibited) and a
// light convexity spot-check along a handful of seeded segments.
class ConvexFunction : public std::enable_shared_from_this<ConvexFunction> {
 public:
  virtual ~ConvexFunction() = default;

  FnKind kind() const { return kind_; }
  const SpaceSpec& space() const { return space_; }
  // A point where the function is finite (properness witness).
  const Point& finite_point() const { return finite_point_; }
  virtual OracleExactness oracle_exactness() const {
    return OracleExactness::Exact;
  }

  ExtendedReal eval(const Point& x) const;

  // Structural subdifferential at x.  Empty when x is outside the effective
  // domain; MembershipOnly when the set exists but has no finite description.
  SubdiffStructure subdiff_structure(const Point& x) const;

  // Element of the subdifferential with minimal dual norm distance to
  // `target` (0 when omitted).  Throws InputError on an empty set.
  DualPoint subgradient_near(const Point& x, const DualPoint& target) const;
  DualPoint subgradient(const Point& x) const;  // nearest to 0

  // --- capability queries (defaults: not available) ---

  // Fenchel conjugate value, when a closed form exists.
  virtual std::optional<ExtendedReal> conjugate(const DualPoint& xs) const;
  // Exact infimum / a minimizer, when known in closed form.
  virtual std::optional<double> known_infimum() const;
  virtual std::optional<Point> known_minimizer() const;
  // True when the function is provably unbounded below.
  virtual bool known_unbounded_below() const;
  // Euclidean proximal map: argmin_y 0.5*|y - w|_2^2 + t * f(y).
  virtual std::optional<Point> prox(const Point& w, double t) const;
  // Differentiable everywhere on the space (domain = everything).
  virtual bool smooth() const { return false; }
  // Gradient; only valid when smooth() is true.
  virtual DualPoint gradient(const Point& x) const;
  // Adds coeff * Hessian(x) into H; only when hessian_available().
  virtual bool hessian_available() const { return false; }
  virtual void accumulate_hessian(const Point& x, double coeff,
                                  Eigen::MatrixXd& H) const;
  // Points likely to expose a membership violation (kinks, domain edges),
  // appended to random sampling in subdiff_membership.
  virtual std::vector<Point> probe_points(const Point& x) const;

  // Factory plumbing: records the properness witness and runs a cheap
  // seeded convexity smoke test (the thorough version is convexity_check
  // below).  Every make_* function calls this exactly once; there is no
  // reason to call it from user code.
  void finalize(Point finite_point);

 protected:
  ConvexFunction(FnKind kind, SpaceSpec space) : kind_(kind), space_(space) {}
  virtual ExtendedReal do_eval(const Point& x) const = 0;
  virtual SubdiffStructure do_subdiff(const Point& x) const = 0;

  FnKind kind_;
  SpaceSpec space_;
  Point finite_point_;
};

// --- factories --------------------------------------------------------------

// 0.5 * (x - b)' M (x - b) with M symmetric positive semidefinite.  Omitting
// b means b = 0.
ConvexFnPtr make_quadratic(const SpaceSpec& s, const Eigen::MatrixXd& M,
                           std::optional<std::vector<double>> shift = {});
// General quadratic 0.5 x'Mx + <lin, x> + cst (M PSD).
ConvexFnPtr make_quadratic_general(const SpaceSpec& s, const Eigen::MatrixXd& M,
                                   std::vector<double> lin, double cst);
// 0.5 * |x|_p^2 in the space norm.
ConvexFnPtr make_pnorm_squared_half(const SpaceSpec& s);
// 0.5 * |x - z|_p^2.
ConvexFnPtr make_shifted_pnorm_squared_half(const Point& z);
// sum_i |x_i|.
ConvexFnPtr make_abs_sum(const SpaceSpec& s);
// max_k ( <a_k, x> + b_k ).
ConvexFnPtr make_max_affine(const SpaceSpec& s,
                            std::vector<std::vector<double>> slopes,
                            std::vector<double> intercepts);
// Indicator of the box prod [lo_i, hi_i]; entries may be +-inf.
ConvexFnPtr make_indicator_box(const SpaceSpec& s, std::vector<double> lo,
                               std::vector<double> hi);
// Indicator of the closed l_p ball of the given radius (space norm).
ConvexFnPtr make_indicator_ball(const SpaceSpec& s, double radius);
// <a, x> + b.
ConvexFnPtr make_affine(const SpaceSpec& s, std::vector<double> slope,
                        double intercept);
ConvexFnPtr make_zero(const SpaceSpec& s);
// Pointwise sum; domains intersect (must still be proper).
ConvexFnPtr make_sum(std::vector<ConvexFnPtr> parts);
ConvexFnPtr combine_sum(ConvexFnPtr a, ConvexFnPtr b);
// t * f with t > 0.
ConvexFnPtr make_scaled(double t, ConvexFnPtr inner);

// Trapezoid discretization of x(.) -> integral of inner over [0, horizon]
// on `nodes` equally spaced time nodes; the argument space is the stacked
// node values (dimension nodes * inner-dim, same exponent p).
ConvexFnPtr build_integral_functional(ConvexFnPtr inner, int nodes,
                                      double horizon);

// Regularized objective 0.5*|x - z|_p^2 + lambda * (f(x) - <x, zs>), the
// workhorse minimized by the variational solvers.  lambda must be positive.
ConvexFnPtr build_psi(ConvexFnPtr f, const Point& z, const DualPoint& zs,
                      double lambda);

// Access to the pieces of a RegularizedObjective (null for other kinds).
struct PsiView {
  ConvexFnPtr f;
  Point z;
  DualPoint zs;
  double lambda = 0.0;
};
std::optional<PsiView> as_psi(const ConvexFunction& g);

// Flattens nested Sum / Scaled / RegularizedObjective nodes into a list of
// (positive coefficient, leaf) terms over the same space.  Leaves are the
// non-aggregate catalog kinds.  Used by the minimizers to pick a route.
struct FlatTerm {
  double coeff;
  ConvexFnPtr leaf;
};
std::vector<FlatTerm> flatten_terms(const ConvexFnPtr& f);

// Introspection views for the solver routes (null for other kinds).
struct MaxAffineView {
  std::vector<std::vector<double>> slopes;
  std::vector<double> intercepts;
};
std::optional<MaxAffineView> as_max_affine(const ConvexFunction& f);

struct BoxView {
  std::vector<double> lo, hi;
};
std::optional<BoxView> as_indicator_box(const ConvexFunction& f);

// --- free operations --------------------------------------------------------

SubdiffRepr subdiff(const ConvexFunction& f, const Point& x);

// Result of testing "xs belongs to the subdifferential of f at x".
struct MembershipResult {
  bool holds = false;
  // True when the verdict is exact (structural/conjugate closed form);
  // false when it rests on sampling and is therefore one-sided: a
  // refutation is conclusive, an acceptance is only evidence.
  bool exact = false;
  // For a refutation: the sampled point of maximal violation, and the
  // violation value f(x) + <y - x, xs> - f(y) > 0 there.
  std::optional<Point> witness;
  double violation = 0.0;
  SamplePlan plan;
};

MembershipResult subdiff_membership(const ConvexFunction& f, const Point& x,
                                    const DualPoint& xs,
                                    const SamplePlan& plan);

// Seeded convexity spot-check: midpoint inequality on `pairs` segments at
// t in {0.25, 0.5, 0.75}.  Returns the worst violation (positive = broken).
double convexity_check(const ConvexFunction& f, std::uint64_t seed, int pairs,
                       double radius);

// Smallest-norm distance from 0 to the subdifferential at x (dual norm);
// +inf when the subdifferential is empty.
double stationarity_residual(const ConvexFunction& f, const Point& x);

}  // namespace monolab
