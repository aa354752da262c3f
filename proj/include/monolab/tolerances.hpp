#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>

namespace monolab {

// All numerical comparisons in the library are relative with an additive
// floor: a quantity q "vanishes at scale s" when |q| <= tol * s with
// s = 1 + (magnitude of the values involved).  Every tolerance constant
// lives here so the defaults are pinned in one place.
struct Tolerances {
  // Additive floor mixed into every relative comparison.
  static constexpr double floor = 1e-12;

  // Duality-map identity residual, relative to 1 + |<x,Jx>|.
  static constexpr double duality_identity = 1e-9;
  // Oddness of the duality map, absolute on coordinates.
  static constexpr double duality_odd = 1e-12;
  // Relative round-trip error of the inverse duality map.
  static constexpr double duality_roundtrip = 1e-10;
  // Finite-difference gradient agreement for the squared-norm functional.
  static constexpr double duality_fd = 1e-6;

  // Convexity spot-check slack, relative to value scale.
  static constexpr double convexity = 1e-9;
  // Monotonicity of subdifferential selections, relative to value scale.
  static constexpr double monotonicity = 1e-10;

  // Ekeland certificate slacks.
  static constexpr double ekeland_gap = 1e-9;
  static constexpr double ekeland_perturbed = 1e-9;
  static constexpr double stationarity_residual = 1e-8;
  static constexpr double unit_ball_slack = 1e-12;

  // Fitzpatrick-side slacks.
  static constexpr double fitz_identity = 1e-12;
  static constexpr double fitz_on_graph = 1e-12;
  static constexpr double fitz_lower_bound = 1e-10;
  static constexpr double fitz_active_tie = 1e-9;
  // Agreement radius for "this point is the listed graph point" matches.
  static constexpr double graph_match = 1e-10;
  static constexpr double monotone_pair = 1e-12;
  static constexpr double psd_symmetry = 1e-12;
  static constexpr double psd_eigen_floor = 1e-10;

  // Resolvent solves: closed-form routes vs iterative routes.
  static constexpr double resolvent_closed_form = 1e-8;
  static constexpr double resolvent_iterative = 1e-6;
  static constexpr double resolvent_recompute = 1e-12;
  static constexpr double scaling_coherence = 1e-8;
  static constexpr double rate_law_slack = 1e-6;

  // Radius at which unbounded normal-cone directions are truncated when a
  // polytope description is requested.
  static constexpr double cone_radius = 1e6;
};

// Scale of a comparison: 1 + max absolute magnitude of the participating
// values.  Keeps relative tolerances meaningful near zero.
inline double scale_of(std::initializer_list<double> values) {
  double m = 0.0;
  for (double v : values) m = std::max(m, std::abs(v));
  return 1.0 + m;
}

inline bool within(double quantity, double tol, double scale) {
  return std::abs(quantity) <= tol * scale + Tolerances::floor;
}

}  // namespace monolab
