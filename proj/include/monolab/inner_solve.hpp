#pragma once

#include <cstdint>
#include <string>

#include "monolab/convex.hpp"

namespace monolab {

// Controls for the minimization facility.  `residual_target` is the dual-norm
// stationarity distance dist_q(0, subdifferential at the iterate) the solver
// tries to reach; `budget` bounds the total inner iterations across phases.
struct MinimizeControls {
  double residual_target = 1e-10;
  int budget = 200000;
  std::uint64_t seed = 0x5eed;
};

struct MinimizeResult {
  Point x;
  double value = 0.0;
  // dist_q(0, subdifferential at x), recomputed from the structural
  // subdifferential after the solve (not trusted from solver state).
  double residual = 0.0;
  int iterations = 0;
  bool budget_exhausted = false;
  // True when the residual target was met.
  bool certified = false;
  // Which route solved the problem: "closed-form", "newton", "fista",
  // "simplex-dual", or "subgradient".
  std::string route;
};

// Minimizes a proper convex catalog function.  Routes, in order of
// preference: closed forms (known minimizers, proximal identities), damped
// Newton for smooth objectives, accelerated proximal gradient plus a
// coordinate polish for composite objectives with a single prox-capable
// piece, a dual simplex method for quadratic-plus-max-affine objectives, and
// a norm-adapted subgradient fallback for everything else.
//
// Throws DivergenceError when the objective is detected to be unbounded
// below.  A spent budget is reported through the result flags, not thrown.
MinimizeResult minimize(const ConvexFnPtr& f, const Point& start,
                        const MinimizeControls& controls = {});

}  // namespace monolab
