// Extended reals and the structural subdifferential machinery: Minkowski
// folding, nearest-element selection, membership, and the conversion to the
// reported polytope form.

#include <algorithm>
#include <cmath>
#include <limits>

#include "monolab/convex.hpp"
#include "monolab/errors.hpp"
#include "monolab/tolerances.hpp"

namespace monolab {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

// --- ExtendedReal -----------------------------------------------------------

ExtendedReal::ExtendedReal(double v) : v_(v) {
  if (std::isnan(v) || v == -kInf) {
    throw InputError("extended real values must be finite or +infinity");
  }
}

ExtendedReal ExtendedReal::infinity() {
  ExtendedReal r;
  r.v_ = kInf;
  return r;
}

bool ExtendedReal::finite() const { return std::isfinite(v_); }

ExtendedReal ExtendedReal::operator+(const ExtendedReal& o) const {
  if (!finite() || !o.finite()) return infinity();
  return ExtendedReal(v_ + o.v_);
}

ExtendedReal ExtendedReal::operator*(double t) const {
  if (t < 0.0) throw InputError("extended reals only scale by t >= 0");
  if (t == 0.0) return ExtendedReal(0.0);
  if (!finite()) return infinity();
  return ExtendedReal(t * v_);
}

// --- SubdiffStructure factories ---------------------------------------------

SubdiffStructure SubdiffStructure::empty(const SpaceSpec& s) {
  SubdiffStructure r;
  r.tag = Tag::Empty;
  r.space = s;
  return r;
}

SubdiffStructure SubdiffStructure::singleton(const SpaceSpec& s,
                                             std::vector<double> base) {
  if (base.size() != s.dim) throw InputError("singleton: wrong dimension");
  SubdiffStructure r;
  r.tag = Tag::Singleton;
  r.space = s;
  r.base = std::move(base);
  return r;
}

SubdiffStructure SubdiffStructure::interval_box(const SpaceSpec& s,
                                                std::vector<double> base,
                                                std::vector<double> lo,
                                                std::vector<double> hi) {
  if (base.size() != s.dim || lo.size() != s.dim || hi.size() != s.dim) {
    throw InputError("interval_box: wrong dimension");
  }
  for (std::size_t i = 0; i < s.dim; ++i) {
    if (lo[i] > hi[i]) throw InputError("interval_box: lo > hi");
  }
  SubdiffStructure r;
  r.tag = Tag::IntervalBox;
  r.space = s;
  r.base = std::move(base);
  r.lo = std::move(lo);
  r.hi = std::move(hi);
  return r;
}

SubdiffStructure SubdiffStructure::hull(const SpaceSpec& s,
                                        std::vector<double> base,
                                        std::vector<std::vector<double>> gens) {
  if (gens.empty()) throw InputError("hull: needs at least one generator");
  for (const auto& g : gens) {
    if (g.size() != s.dim) throw InputError("hull: generator dimension");
  }
  SubdiffStructure r;
  r.tag = Tag::Hull;
  r.space = s;
  r.base = std::move(base);
  r.gens = std::move(gens);
  return r;
}

SubdiffStructure SubdiffStructure::ray(const SpaceSpec& s,
                                       std::vector<double> base,
                                       std::vector<double> dir) {
  if (base.size() != s.dim || dir.size() != s.dim) {
    throw InputError("ray: wrong dimension");
  }
  SubdiffStructure r;
  r.tag = Tag::Ray;
  r.space = s;
  r.base = std::move(base);
  r.dir = std::move(dir);
  return r;
}

SubdiffStructure SubdiffStructure::membership_only(const SpaceSpec& s) {
  SubdiffStructure r;
  r.tag = Tag::MembershipOnly;
  r.space = s;
  return r;
}

// --- shifting / scaling / Minkowski sums ------------------------------------

SubdiffStructure shift_structure(SubdiffStructure s,
                                 const std::vector<double>& delta) {
  switch (s.tag) {
    case SubdiffStructure::Tag::Empty:
    case SubdiffStructure::Tag::MembershipOnly:
      return s;
    case SubdiffStructure::Tag::Composite:
      // Fold the shift into the first part so the sum is unchanged.
      s.parts.front() = shift_structure(std::move(s.parts.front()), delta);
      return s;
    default:
      for (std::size_t i = 0; i < s.base.size(); ++i) s.base[i] += delta[i];
      return s;
  }
}

SubdiffStructure scale_structure(SubdiffStructure s, double t) {
  if (!(t > 0.0)) throw InputError("scale_structure: factor must be > 0");
  switch (s.tag) {
    case SubdiffStructure::Tag::Empty:
    case SubdiffStructure::Tag::MembershipOnly:
      return s;
    case SubdiffStructure::Tag::Composite:
      for (auto& p : s.parts) p = scale_structure(std::move(p), t);
      return s;
    default:
      for (auto& v : s.base) v *= t;
      for (auto& v : s.lo)
        if (std::isfinite(v)) v *= t;
      for (auto& v : s.hi)
        if (std::isfinite(v)) v *= t;
      for (auto& g : s.gens)
        for (auto& v : g) v *= t;
      for (auto& v : s.dir) v *= t;
      return s;
  }
}

namespace {

// Adds b's offset into a's base coordinatewise.
void add_base(SubdiffStructure& a, const std::vector<double>& b) {
  for (std::size_t i = 0; i < a.base.size(); ++i) a.base[i] += b[i];
}

}  // namespace

SubdiffStructure minkowski_sum(const SubdiffStructure& a,
                               const SubdiffStructure& b) {
  using Tag = SubdiffStructure::Tag;
  if (a.space != b.space) throw InputError("minkowski_sum: mismatched spaces");
  if (a.tag == Tag::Empty || b.tag == Tag::Empty) {
    return SubdiffStructure::empty(a.space);
  }
  if (a.tag == Tag::MembershipOnly || b.tag == Tag::MembershipOnly) {
    return SubdiffStructure::membership_only(a.space);
  }
  // Singletons fold into the other side's base offset.
  if (a.tag == Tag::Singleton) {
    SubdiffStructure r = b;
    if (r.tag == Tag::Composite) {
      r.parts.front() = shift_structure(std::move(r.parts.front()), a.base);
    } else {
      add_base(r, a.base);
    }
    return r;
  }
  if (b.tag == Tag::Singleton) return minkowski_sum(b, a);
  // Two interval boxes merge exactly (sums of independent intervals).
  if (a.tag == Tag::IntervalBox && b.tag == Tag::IntervalBox) {
    SubdiffStructure r = a;
    add_base(r, b.base);
    for (std::size_t i = 0; i < r.lo.size(); ++i) {
      r.lo[i] += b.lo[i];
      r.hi[i] += b.hi[i];
    }
    return r;
  }
  // Anything else stays a composite; nested composites flatten.
  SubdiffStructure r;
  r.tag = Tag::Composite;
  r.space = a.space;
  auto push = [&r](const SubdiffStructure& s) {
    if (s.tag == Tag::Composite) {
      for (const auto& p : s.parts) r.parts.push_back(p);
    } else {
      r.parts.push_back(s);
    }
  };
  push(a);
  push(b);
  return r;
}

// --- nearest-element machinery ----------------------------------------------

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Euclidean projection of w onto the probability simplex (Held et al.).
std::vector<double> project_simplex(std::vector<double> w) {
  std::vector<double> u = w;
  std::sort(u.begin(), u.end(), std::greater<double>());
  double css = 0.0;
  double theta = 0.0;
  int rho = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    css += u[i];
    const double t = (css - 1.0) / static_cast<double>(i + 1);
    if (u[i] - t > 0.0) {
      rho = static_cast<int>(i + 1);
      theta = t;
    }
  }
  if (rho == 0) {  // numerically degenerate; fall back to uniform
    std::fill(w.begin(), w.end(), 1.0 / static_cast<double>(w.size()));
    return w;
  }
  for (auto& v : w) v = std::max(0.0, v - theta);
  return w;
}

// Minimizes |G theta - t|_2 over the simplex by accelerated projected
// gradient with function-value restarts, then polishes on the detected
// support by solving the equality-constrained least squares system.
// Returns the convex combination weights.
std::vector<double> hull_weights(const std::vector<std::vector<double>>& gens,
                                 const std::vector<double>& target) {
  const std::size_t k = gens.size();
  const std::size_t d = target.size();
  if (k == 1) return {1.0};

  Eigen::MatrixXd G(d, k);
  for (std::size_t j = 0; j < k; ++j)
    for (std::size_t i = 0; i < d; ++i) G(i, j) = gens[j][i];
  Eigen::VectorXd t(d);
  for (std::size_t i = 0; i < d; ++i) t(i) = target[i];

  const double lip = std::max(1e-30, (G.transpose() * G).norm());
  std::vector<double> th(k, 1.0 / static_cast<double>(k));
  std::vector<double> th_prev = th;
  double momentum = 1.0;
  double best_val = std::numeric_limits<double>::infinity();
  std::vector<double> best = th;

  Eigen::VectorXd theta(k), y(k);
  for (std::size_t j = 0; j < k; ++j) theta(j) = th[j];
  y = theta;
  Eigen::VectorXd theta_old = theta;

  for (int it = 0; it < 2000; ++it) {
    const Eigen::VectorXd r = G * y - t;
    const Eigen::VectorXd grad = G.transpose() * r;
    Eigen::VectorXd cand = y - grad / lip;
    std::vector<double> cv(cand.data(), cand.data() + k);
    cv = project_simplex(std::move(cv));
    theta_old = theta;
    for (std::size_t j = 0; j < k; ++j) theta(j) = cv[j];
    const double val = (G * theta - t).squaredNorm();
    if (val < best_val) {
      best_val = val;
      best = cv;
    }
    if (val > (G * y - t).squaredNorm()) {
      // restart the momentum when the accelerated step overshoots
      momentum = 1.0;
      y = theta;
    } else {
      const double m_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
      y = theta + ((momentum - 1.0) / m_next) * (theta - theta_old);
      momentum = m_next;
    }
    if ((theta - theta_old).norm() < 1e-15 * (1.0 + theta.norm())) break;
  }

  // Support polish: restrict to the active generators and solve the KKT
  // least-squares system with the affine constraint sum(theta) = 1.
  std::vector<int> support;
  for (std::size_t j = 0; j < k; ++j)
    if (best[j] > 1e-12) support.push_back(static_cast<int>(j));
  if (!support.empty() && support.size() < 64) {
    const std::size_t m = support.size();
    Eigen::MatrixXd Gs(d, m);
    for (std::size_t j = 0; j < m; ++j) Gs.col(j) = G.col(support[j]);
    // minimize |Gs w - t|^2 s.t. sum w = 1  (KKT system)
    Eigen::MatrixXd K(m + 1, m + 1);
    K.setZero();
    K.topLeftCorner(m, m) = Gs.transpose() * Gs;
    K.topRightCorner(m, 1).setOnes();
    K.bottomLeftCorner(1, m).setOnes();
    Eigen::VectorXd rhs(m + 1);
    rhs.head(m) = Gs.transpose() * t;
    rhs(m) = 1.0;
    const Eigen::VectorXd sol = K.fullPivLu().solve(rhs);
    bool feasible = true;
    for (std::size_t j = 0; j < m; ++j)
      if (sol(j) < -1e-12) feasible = false;
    if (feasible) {
      Eigen::VectorXd w = Eigen::VectorXd::Zero(k);
      for (std::size_t j = 0; j < m; ++j)
        w(support[j]) = std::max(0.0, sol(j));
      w /= w.sum();
      if ((G * w - t).squaredNorm() <= best_val + 1e-15) {
        for (std::size_t j = 0; j < k; ++j) best[j] = w(j);
      }
    }
  }
  return best;
}

std::vector<double> hull_nearest(const SubdiffStructure& s,
                                 const std::vector<double>& target) {
  std::vector<double> rel(target.size());
  for (std::size_t i = 0; i < rel.size(); ++i) rel[i] = target[i] - s.base[i];
  const std::vector<double> w = hull_weights(s.gens, rel);
  std::vector<double> out = s.base;
  for (std::size_t j = 0; j < s.gens.size(); ++j)
    for (std::size_t i = 0; i < out.size(); ++i)
      out[i] += w[j] * s.gens[j][i];
  return out;
}

}  // namespace

std::vector<double> nearest_element(const SubdiffStructure& s,
                                    const std::vector<double>& target) {
  using Tag = SubdiffStructure::Tag;
  switch (s.tag) {
    case Tag::Empty:
      throw InputError("nearest_element: subdifferential is empty");
    case Tag::MembershipOnly:
      throw InputError(
          "nearest_element: set has no finite description to select from");
    case Tag::Singleton:
      return s.base;
    case Tag::IntervalBox: {
      // Coordinatewise clamping is the exact minimizer of any l_r distance
      // over a box because the objective separates across coordinates.
      std::vector<double> out(s.base.size());
      for (std::size_t i = 0; i < out.size(); ++i) {
        const double rel = target[i] - s.base[i];
        out[i] = s.base[i] + std::clamp(rel, s.lo[i], s.hi[i]);
      }
      return out;
    }
    case Tag::Ray: {
      const double dd = dot(s.dir, s.dir);
      if (dd <= 0.0) return s.base;
      std::vector<double> rel(target.size());
      for (std::size_t i = 0; i < rel.size(); ++i)
        rel[i] = target[i] - s.base[i];
      const double t = std::max(0.0, dot(s.dir, rel) / dd);
      std::vector<double> out = s.base;
      for (std::size_t i = 0; i < out.size(); ++i) out[i] += t * s.dir[i];
      return out;
    }
    case Tag::Hull:
      // Hull selection minimizes the Euclidean distance; that is exact for
      // q = 2 and yields a valid (if not always q-optimal) member otherwise.
      return hull_nearest(s, target);
    case Tag::Composite: {
      // Block coordinate descent over the parts: each pass re-selects one
      // part against the residual left by the others.  The joint objective
      // is smooth and convex, so the alternation converges; a handful of
      // passes is plenty at the accuracy the callers need.
      std::vector<std::vector<double>> sel(s.parts.size());
      for (std::size_t j = 0; j < s.parts.size(); ++j) {
        sel[j] = nearest_element(s.parts[j], std::vector<double>(
                                                 target.size(), 0.0));
      }
      const int passes = s.parts.size() > 1 ? 24 : 1;
      for (int pass = 0; pass < passes; ++pass) {
        for (std::size_t j = 0; j < s.parts.size(); ++j) {
          std::vector<double> residual = target;
          for (std::size_t l = 0; l < s.parts.size(); ++l) {
            if (l == j) continue;
            for (std::size_t i = 0; i < residual.size(); ++i)
              residual[i] -= sel[l][i];
          }
          sel[j] = nearest_element(s.parts[j], residual);
        }
      }
      std::vector<double> out(target.size(), 0.0);
      for (const auto& part_sel : sel)
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += part_sel[i];
      return out;
    }
  }
  throw Error("nearest_element: unreachable");
}

bool structure_contains(const SubdiffStructure& s,
                        const std::vector<double>& cand, double tol) {
  using Tag = SubdiffStructure::Tag;
  switch (s.tag) {
    case Tag::Empty:
      return false;
    case Tag::MembershipOnly:
      throw InputError("structure_contains: no finite description available");
    case Tag::IntervalBox:
      for (std::size_t i = 0; i < cand.size(); ++i) {
        const double rel = cand[i] - s.base[i];
        if (rel < s.lo[i] - tol || rel > s.hi[i] + tol) return false;
      }
      return true;
    default: {
      const std::vector<double> nearest = nearest_element(s, cand);
      double dist2 = 0.0;
      for (std::size_t i = 0; i < cand.size(); ++i) {
        const double d = cand[i] - nearest[i];
        dist2 += d * d;
      }
      return std::sqrt(dist2) <= tol;
    }
  }
}

double structure_support_min(const SubdiffStructure& s,
                             const std::vector<double>& c) {
  using Tag = SubdiffStructure::Tag;
  auto dot = [](const std::vector<double>& a, const std::vector<double>& b) {
    double v = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) v += a[i] * b[i];
    return v;
  };
  switch (s.tag) {
    case Tag::Empty:
      return kInf;
    case Tag::MembershipOnly:
      throw InputError(
          "structure_support_min: no finite description available");
    case Tag::Singleton:
      return dot(c, s.base);
    case Tag::IntervalBox: {
      double v = dot(c, s.base);
      for (std::size_t i = 0; i < c.size(); ++i) {
        if (c[i] > 0.0) {
          if (std::isinf(s.lo[i])) return -kInf;
          v += c[i] * s.lo[i];
        } else if (c[i] < 0.0) {
          if (std::isinf(s.hi[i])) return -kInf;
          v += c[i] * s.hi[i];
        }
        // c[i] == 0 contributes nothing even on unbounded sides.
      }
      return v;
    }
    case Tag::Hull: {
      double best = kInf;
      for (const auto& g : s.gens) best = std::min(best, dot(c, g));
      return dot(c, s.base) + best;
    }
    case Tag::Ray:
      if (dot(c, s.dir) < 0.0) return -kInf;
      return dot(c, s.base);
    case Tag::Composite: {
      double v = 0.0;
      for (const auto& part : s.parts) {
        const double m = structure_support_min(part, c);
        if (m == -kInf) return -kInf;
        v += m;
      }
      return v;
    }
  }
  throw Error("structure_support_min: unreachable");
}

// --- reported representation -------------------------------------------------

namespace {

// Enumerates the corners of the (finite) box description into `out`.
void box_corners(const SubdiffStructure& s,
                 const std::vector<double>& lo,
                 const std::vector<double>& hi,
                 std::vector<std::vector<double>>& out) {
  std::vector<int> axes;
  for (std::size_t i = 0; i < lo.size(); ++i) {
    if (hi[i] > lo[i]) axes.push_back(static_cast<int>(i));
  }
  const std::size_t n = axes.size();
  out.clear();
  out.reserve(std::size_t(1) << n);
  for (std::size_t mask = 0; mask < (std::size_t(1) << n); ++mask) {
    std::vector<double> corner(s.base.size());
    for (std::size_t i = 0; i < corner.size(); ++i)
      corner[i] = s.base[i] + lo[i];
    for (std::size_t b = 0; b < n; ++b) {
      if (mask & (std::size_t(1) << b)) {
        const int ax = axes[b];
        corner[ax] = s.base[ax] + hi[ax];
      }
    }
    out.push_back(std::move(corner));
  }
}

}  // namespace

SubdiffRepr materialize_subdiff(const SubdiffStructure& s, double cone_radius,
                                int corner_cap) {
  using Tag = SubdiffStructure::Tag;
  SubdiffRepr r;
  switch (s.tag) {
    case Tag::Empty:
      r.variant = SubdiffRepr::Variant::Empty;
      return r;
    case Tag::MembershipOnly:
      r.variant = SubdiffRepr::Variant::MembershipOnly;
      return r;
    case Tag::Singleton:
      r.variant = SubdiffRepr::Variant::Singleton;
      r.generators.emplace_back(s.space, s.base);
      return r;
    case Tag::Ray: {
      r.variant = SubdiffRepr::Variant::Polytope;
      r.truncated = true;
      r.generators.emplace_back(s.space, s.base);
      std::vector<double> far = s.base;
      const double dn = lr_norm(s.dir, 2.0);
      if (dn > 0.0) {
        for (std::size_t i = 0; i < far.size(); ++i)
          far[i] += cone_radius / dn * s.dir[i];
      }
      r.generators.emplace_back(s.space, far);
      return r;
    }
    case Tag::IntervalBox: {
      // Unbounded sides are cut at the cone radius and flagged.
      std::vector<double> lo = s.lo, hi = s.hi;
      bool truncated = false;
      int free_axes = 0;
      for (std::size_t i = 0; i < lo.size(); ++i) {
        if (!std::isfinite(lo[i])) {
          lo[i] = -cone_radius;
          truncated = true;
        }
        if (!std::isfinite(hi[i])) {
          hi[i] = cone_radius;
          truncated = true;
        }
        if (hi[i] > lo[i]) ++free_axes;
      }
      if (free_axes > corner_cap) {
        r.variant = SubdiffRepr::Variant::MembershipOnly;
        r.truncated = truncated;
        return r;
      }
      std::vector<std::vector<double>> corners;
      box_corners(s, lo, hi, corners);
      if (corners.size() == 1) {
        r.variant = SubdiffRepr::Variant::Singleton;
      } else {
        r.variant = SubdiffRepr::Variant::Polytope;
      }
      r.truncated = truncated;
      for (auto& c : corners) r.generators.emplace_back(s.space, std::move(c));
      return r;
    }
    case Tag::Hull: {
      r.variant = s.gens.size() == 1 ? SubdiffRepr::Variant::Singleton
                                     : SubdiffRepr::Variant::Polytope;
      for (const auto& g : s.gens) {
        std::vector<double> abs = s.base;
        for (std::size_t i = 0; i < abs.size(); ++i) abs[i] += g[i];
        r.generators.emplace_back(s.space, std::move(abs));
      }
      return r;
    }
    case Tag::Composite: {
      // Generators of a Minkowski sum: all pairwise sums of the parts'
      // generators.  The product is capped to keep the output small.
      std::vector<std::vector<double>> acc = {
          std::vector<double>(s.space.dim, 0.0)};
      bool truncated = false;
      for (const auto& part : s.parts) {
        SubdiffRepr pr = materialize_subdiff(part, cone_radius, corner_cap);
        if (pr.variant == SubdiffRepr::Variant::Empty) {
          r.variant = SubdiffRepr::Variant::Empty;
          return r;
        }
        if (pr.variant == SubdiffRepr::Variant::MembershipOnly ||
            acc.size() * pr.generators.size() > 4096) {
          r.variant = SubdiffRepr::Variant::MembershipOnly;
          return r;
        }
        truncated = truncated || pr.truncated;
        std::vector<std::vector<double>> next;
        next.reserve(acc.size() * pr.generators.size());
        for (const auto& a : acc) {
          for (const auto& g : pr.generators) {
            std::vector<double> v = a;
            for (std::size_t i = 0; i < v.size(); ++i) v[i] += g.c[i];
            next.push_back(std::move(v));
          }
        }
        acc = std::move(next);
      }
      r.variant = acc.size() == 1 ? SubdiffRepr::Variant::Singleton
                                  : SubdiffRepr::Variant::Polytope;
      r.truncated = truncated;
      for (auto& v : acc) r.generators.emplace_back(s.space, std::move(v));
      return r;
    }
  }
  throw Error("materialize_subdiff: unreachable");
}

}  // namespace monolab
