#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace monolab {

// Finite-dimensional real space R^d carrying the l_p norm, together with its
// dual exponent q = p / (p - 1).  Only p strictly between 1 and infinity is
// supported: there the norm is smooth away from 0 and the duality map is
// single-valued, which the rest of the library relies on.
struct SpaceSpec {
  std::size_t dim = 0;
  double p = 2.0;
  double q = 2.0;

  SpaceSpec() = default;
  SpaceSpec(std::size_t dim_, double p_);

  bool operator==(const SpaceSpec& o) const {
    return dim == o.dim && p == o.p;
  }
  bool operator!=(const SpaceSpec& o) const { return !(*this == o); }

  std::string describe() const;
};

// Element of the primal space (norm l_p).
struct Point {
  SpaceSpec space;
  std::vector<double> c;

  Point() = default;
  Point(SpaceSpec s, std::vector<double> coords);
};

// Element of the dual space (norm l_q).  Kept as a distinct type so that
// primal and dual vectors cannot be mixed up silently.
struct DualPoint {
  SpaceSpec space;
  std::vector<double> c;

  DualPoint() = default;
  DualPoint(SpaceSpec s, std::vector<double> coords);
};

// Element of X x X* with the Euclidean combination of the two norms.
struct ProductPoint {
  Point x;
  DualPoint xs;

  ProductPoint() = default;
  ProductPoint(Point x_, DualPoint xs_);
};

// Element of the dual of X x X*, identified with X* x X.  The pairing
// against a ProductPoint is <x, g1> + <g2, xs>: the primal slot of the
// product pairs with the dual slot of the functional and vice versa.
struct ProductDual {
  DualPoint g1;  // pairs with the primal component
  Point g2;      // pairs with the dual component

  ProductDual() = default;
  ProductDual(DualPoint g1_, Point g2_);
};

// --- basic operations ------------------------------------------------------

double pairing(const Point& x, const DualPoint& xs);
double norm(const Point& x);
double norm(const DualPoint& xs);

// Single-valued duality map J : X -> X*, characterized by
// <x, Jx> = |x|^2 = |Jx|_*^2.  Maps 0 to 0; inputs with |x| below 1e-300
// are treated as 0 to avoid overflow in the power computations.
DualPoint duality_map(const Point& x);

// Inverse duality map X* -> X; equals the duality map of the dual space.
Point duality_map_inverse(const DualPoint& xs);

double product_pairing(const ProductDual& g, const ProductPoint& w);
double norm(const ProductPoint& w);
double norm(const ProductDual& g);

// Duality map of the product space: acts componentwise as (J x, J^{-1} xs).
ProductDual product_duality_map(const ProductPoint& w);

// --- small vector helpers (coordinate arithmetic) --------------------------

Point add(const Point& a, const Point& b);
Point sub(const Point& a, const Point& b);
Point scale(double t, const Point& a);
DualPoint add(const DualPoint& a, const DualPoint& b);
DualPoint sub(const DualPoint& a, const DualPoint& b);
DualPoint scale(double t, const DualPoint& a);

// l_r norm of a raw coordinate vector (r in (1, inf)).
double lr_norm(const std::vector<double>& v, double r);

// Throws InputError unless the two specs agree.
void require_same_space(const SpaceSpec& a, const SpaceSpec& b,
                        const char* where);

}  // namespace monolab
