#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "monolab/convex.hpp"
#include "monolab/space.hpp"

namespace monolab {

// Finite list of (point, dual point) pairs: the graph of a set-valued
// operator restricted to finitely many samples.
struct OperatorGraph {
  SpaceSpec space;
  std::vector<std::pair<Point, DualPoint>> pairs;

  OperatorGraph() = default;
  // Validates: nonempty, every pair in `space`.
  OperatorGraph(SpaceSpec s, std::vector<std::pair<Point, DualPoint>> pairs_);
};

// CSV exchange: one row per pair, 2*dim numeric columns (point coordinates
// then dual coordinates); an optional non-numeric header row is skipped.
OperatorGraph graph_from_csv(const SpaceSpec& s, const std::string& path);
void graph_to_csv(const OperatorGraph& g, const std::string& path);

enum class OperatorVariant { FiniteGraph, PsdLinear, SubdiffOf };
enum class MaximalFlag { AssertedMaximal, Unknown };

// One of: a finite sampled graph, the linear operator x -> Mx with M
// symmetric positive semidefinite, or the subdifferential of a catalog
// convex function.  Finite graphs are never maximal, so their flag is
// always Unknown; the other two variants are asserted maximal.
class OperatorRepr {
 public:
  static OperatorRepr finite_graph(OperatorGraph g);
  static OperatorRepr psd_linear(const SpaceSpec& s, Eigen::MatrixXd M);
  static OperatorRepr subdiff_of(ConvexFnPtr f);

  OperatorVariant variant() const { return variant_; }
  MaximalFlag maximal_flag() const { return maximal_; }
  const SpaceSpec& space() const { return space_; }

  const OperatorGraph& graph() const;      // FiniteGraph only
  const Eigen::MatrixXd& matrix() const;   // PsdLinear only
  const ConvexFnPtr& function() const;     // SubdiffOf only

  // A selected operator value at x: Mx for PsdLinear, a subgradient for
  // SubdiffOf (nearest `toward` when given), nothing for FiniteGraph off
  // the listed points.
  std::optional<DualPoint> value_at(const Point& x,
                                    const DualPoint* toward = nullptr) const;

 private:
  OperatorRepr() = default;
  OperatorVariant variant_ = OperatorVariant::FiniteGraph;
  MaximalFlag maximal_ = MaximalFlag::Unknown;
  SpaceSpec space_;
  OperatorGraph graph_;
  Eigen::MatrixXd matrix_;
  ConvexFnPtr fn_;
};

// --- monotonicity diagnostics ------------------------------------------------

struct MonotoneCheckResult {
  bool monotone = true;
  // Worst pair when not monotone.
  std::size_t i = 0, j = 0;
  double value = 0.0;  // <x_i - x_j, xs_i - xs_j> at the worst pair
};

// Exhaustive O(n^2) pairwise check of <x-y, x*-y*> >= 0 with relative
// tolerance; reports the worst violating pair.
MonotoneCheckResult check_monotone(const OperatorGraph& g);

struct MonotoneGapResult {
  // inf over the (sampled) graph of <z-u, z*-u*>; >= 0 means (z, z*) is
  // monotonically related.  -infinity when a subdifferential direction is
  // unbounded in the decreasing sense.
  double value = 0.0;
  // Exact for FiniteGraph; sampled (one-sided: reported >= true inf) for
  // the other variants.
  bool exact = false;
  SamplePlan plan;
};

// Plan semantics: count samples in a ball of `radius` around z (defaults:
// 512 points, radius 5 * (1 + |z|)).  Ignored for FiniteGraph.
MonotoneGapResult monotone_gap(const OperatorRepr& a, const Point& z,
                               const DualPoint& zs,
                               const SamplePlan& plan = {});

// --- Fitzpatrick representation ----------------------------------------------

struct FitzOptions {
  // Sampling region for the GridSup fallback: box [lo, hi]^d unless
  // explicit per-axis bounds are given.
  double lo = -3.0;
  double hi = 3.0;
  std::vector<double> lo_axes, hi_axes;
  int per_axis = 9;        // grid resolution when per_axis^d stays small
  int max_pieces = 4096;   // sampled pieces otherwise
  std::uint64_t seed = 0x46495a;
};

// Evaluable representation of H(x, x*) = sup over the graph of
// <u, x*> + <x, u*> - <u, u*>.
struct FitzpatrickRepr {
  enum class Variant { MaxAffine, ClosedQuadratic, GridSup };

  struct Piece {
    std::vector<double> u, us;
    double off = 0.0;  // <u, u*>
  };

  Variant variant = Variant::MaxAffine;
  SpaceSpec space;
  std::vector<Piece> pieces;   // MaxAffine / GridSup
  Eigen::MatrixXd M, Minv;     // ClosedQuadratic
  std::string warning;         // set when a closed form fell back to GridSup

  // True when the value is only a lower bound (sup over a sampled subset).
  bool one_sided() const { return variant == Variant::GridSup; }
};

// FiniteGraph -> exact MaxAffine; PsdLinear with invertible M at p=2 ->
// ClosedQuadratic H = 1/4 (x* + Mx)' M^{-1} (x* + Mx); anything else ->
// GridSup over a sampled subgraph (one-sided, with a warning recorded when
// it is a fallback from a singular or non-Hilbert ClosedQuadratic request).
FitzpatrickRepr fitzpatrick_build(const OperatorRepr& a,
                                  const FitzOptions& options = {});

// Exact for MaxAffine/ClosedQuadratic; lower bound for GridSup.
double fitzpatrick_eval(const FitzpatrickRepr& h, const Point& x,
                        const DualPoint& xs);

// Subdifferential of H at (x, x*) over the product space.  Elements are
// pairs (g1, g2) = (u*, u) acting through the swapped pairing
// <(g1, g2), (z, z*)> = <z, g1> + <g2, z*>.
struct ProductSubdiff {
  SubdiffRepr::Variant variant = SubdiffRepr::Variant::Empty;
  std::vector<ProductDual> generators;
};

// MaxAffine: hull of the pieces active within 1e-9 * scale; ClosedQuadratic:
// the exact gradient singleton (1/2 (x*+Mx), 1/2 M^{-1}(x*+Mx)).  GridSup
// has no trustworthy structure and raises UnsupportedError.
ProductSubdiff fitzpatrick_subdiff(const FitzpatrickRepr& h, const Point& x,
                                   const DualPoint& xs);

// --- theorem-level checks ------------------------------------------------

// Per-point verdicts for the four equivalent conditions at (x, x*):
//   graph_member       : x* = Mx (PsdLinear) / pair listed (FiniteGraph) /
//                        subdifferential membership (SubdiffOf)
//   pairing_equality   : H(x, x*) = <x, x*>
//   witness_ok         : some graph point (u, u*) has <u-x, u*-x*> = 0;
//                        witnessed by (x, x*) itself when the subdiff
//                        condition holds
//   subdiff_member     : (x*, x) belongs to the subdifferential of H at
//                        (x, x*)
struct FitzPointVerdict {
  bool graph_member = false;
  bool pairing_equality = false;
  bool witness_ok = false;
  bool subdiff_member = false;
  double h_value = 0.0;
  double pairing_value = 0.0;
  bool consistent = false;  // all four verdicts agree
};

struct FitzTheoremReport {
  std::vector<FitzPointVerdict> points;
  bool all_consistent = false;
  // GridSup-backed: only "H > pairing implies off the graph" is conclusive.
  bool one_sided = false;
};

FitzTheoremReport fitzpatrick_theorem_check(
    const OperatorRepr& a,
    const std::vector<std::pair<Point, DualPoint>>& points,
    const FitzOptions& options = {});

// --- extension scan ------------------------------------------------------

struct ExtensionCandidate {
  Point x;
  DualPoint xs;
  double gap = 0.0;  // <x, x*> - H(x, x*) = inf over the graph of <x-u, x*-u*>
};

// Grid scan of the product-space box (first dim axes: x, last dim axes: x*)
// for points strictly monotonically related to the graph (gap > tol): each
// one certifies the graph is not maximal and is an extension candidate.  An
// empty result is evidence, not proof, of maximality within the region.
std::vector<ExtensionCandidate> extension_scan(const OperatorGraph& g,
                                               const std::vector<double>& lo,
                                               const std::vector<double>& hi,
                                               int per_axis,
                                               double tol = 1e-9);

}  // namespace monolab
