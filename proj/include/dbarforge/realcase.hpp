#ifndef DBARFORGE_REALCASE_HPP
#define DBARFORGE_REALCASE_HPP

// Real-variable specialization: exterior calculus on matrix-valued forms over
// a ball in R^d, the radial homotopy operator for the exterior derivative,
// and the fixed-radius iteration that produces parallel frames of a flat
// connection d + A.
//
// Representation: a degree-q component dx_I is keyed by the axis bitmask I,
// exactly as the complex layer keys dzbar_I.  Coefficients reuse the
// truncated polynomial algebra with the FIRST exponent block as the real
// variables x_1..x_d; the conjugate block stays unused.  Everything that is
// blind to which derivative acts (products, Neumann inverses, truncation
// provenance) is shared with the complex layer through PolyMat.

#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "dbarforge/ball.hpp"
#include "dbarforge/poly.hpp"
#include "dbarforge/recalibration.hpp"

namespace dbf {

struct RealBall {
  int d = 2;      // real dimension
  double r = 1.0; // radius

  bool operator==(const RealBall& o) const { return d == o.d && r == o.r; }
};

template <class S>
struct RealForm {
  RealBall dom;
  int q = 0;
  int rows = 1, cols = 1;
  int cap = 12;
  std::map<unsigned, PolyMat<S>> comp;

  RealForm() = default;
  RealForm(RealBall d_, int q_, int r_, int c_, int cap_ = 12)
      : dom(d_), q(q_), rows(r_), cols(c_), cap(cap_) {}

  bool has(unsigned key) const { return comp.count(key) != 0; }

  const PolyMat<S>& at(unsigned key) const {
    auto it = comp.find(key);
    if (it == comp.end()) throw std::logic_error("missing component");
    return it->second;
  }

  PolyMat<S> get(unsigned key) const {
    auto it = comp.find(key);
    if (it != comp.end()) return it->second;
    return PolyMat<S>(rows, cols, dom.d, cap);
  }

  void set(unsigned key, PolyMat<S> m) {
    if (popcount(key) != q) throw std::logic_error("component arity mismatch");
    comp[key] = std::move(m);
  }

  bool is_zero_stored() const {
    for (auto& [k, m] : comp)
      if (!m.is_zero()) return false;
    return true;
  }

  double max_coeff_abs() const {
    double m = 0.0;
    for (auto& [k, mat] : comp)
      for (auto& p : mat.e) m = std::max(m, p.max_coeff_abs());
    return m;
  }

  bool zero_in_band(int deg) const {
    for (auto& [k, mat] : comp)
      for (auto& p : mat.e)
        if (!p.zero_in_band(deg)) return false;
    return true;
  }

  int trusted_degree() const {
    int v = kValidEntire;
    for (auto& [k, m] : comp) v = std::min(v, m.min_valid());
    return v == kValidEntire ? cap : std::min(v, cap);
  }

  // True when no stored coefficient touches the conjugate exponent block;
  // every honest real form satisfies this.
  bool pure_real_frame() const {
    for (auto& [k, mat] : comp)
      for (auto& p : mat.e)
        for (auto& [m, v] : p.c)
          for (int i = 0; i < kMaxVars; ++i)
            if (m.b[size_t(i)] != 0) return false;
    return true;
  }
};

template <class S>
void check_same_shape(const RealForm<S>& a, const RealForm<S>& b) {
  if (!(a.dom == b.dom) || a.q != b.q || a.rows != b.rows || a.cols != b.cols)
    throw std::logic_error("real form shape mismatch");
}

template <class S>
RealForm<S> add(const RealForm<S>& a, const RealForm<S>& b) {
  check_same_shape(a, b);
  RealForm<S> r = a;
  for (auto& [k, m] : b.comp) {
    auto it = r.comp.find(k);
    if (it == r.comp.end()) r.comp.emplace(k, m);
    else it->second = it->second + m;
  }
  return r;
}

template <class S>
RealForm<S> sub(const RealForm<S>& a, const RealForm<S>& b) {
  check_same_shape(a, b);
  RealForm<S> r = a;
  for (auto& [k, m] : b.comp) {
    auto it = r.comp.find(k);
    if (it == r.comp.end()) r.comp.emplace(k, -m);
    else it->second = it->second - m;
  }
  return r;
}

template <class S>
RealForm<S> neg(const RealForm<S>& a) {
  RealForm<S> r = a;
  for (auto& [k, m] : r.comp) m = -m;
  return r;
}

template <class S>
RealForm<S> scale(const RealForm<S>& a, const S& v) {
  RealForm<S> r = a;
  for (auto& [k, m] : r.comp) m = m.scaled(v);
  return r;
}

// Wedge with matrix multiplication of the coefficients, same sign bookkeeping
// as the complex layer (the frame is dx_I instead of dzbar_I).
template <class S>
RealForm<S> wedge(const RealForm<S>& u, const RealForm<S>& v) {
  if (!(u.dom == v.dom)) throw std::logic_error("wedge: domain mismatch");
  if (u.cols != v.rows) throw std::logic_error("wedge: shape mismatch");
  RealForm<S> r(u.dom, u.q + v.q, u.rows, v.cols, u.cap);
  if (r.q > u.dom.d) return r; // degree beyond dimension is identically zero
  for (auto& [I, mu] : u.comp)
    for (auto& [J, mv] : v.comp) {
      if (I & J) continue;
      unsigned K = I | J;
      int sg = wedge_sign(I, J);
      PolyMat<S> t = mu * mv;
      if (sg < 0) t = -t;
      auto it = r.comp.find(K);
      if (it == r.comp.end()) r.comp.emplace(K, std::move(t));
      else it->second = it->second + t;
    }
  return r;
}

// (du)_K = sum over j in K of insert_sign(j, K \ {j}) d u_{K\{j}} / dx_j.
template <class S>
RealForm<S> exterior_deriv(const RealForm<S>& u) {
  RealForm<S> r(u.dom, u.q + 1, u.rows, u.cols, u.cap);
  if (r.q > u.dom.d) return r;
  for (auto& [I, m] : u.comp) {
    for (int j = 0; j < u.dom.d; ++j) {
      if (I >> j & 1u) continue;
      unsigned K = I | (1u << j);
      int sg = insert_sign(j, I);
      PolyMat<S> d(m.rows, m.cols, u.dom.d, u.cap);
      for (size_t t = 0; t < m.e.size(); ++t) d.e[t] = m.e[t].dz(j);
      if (sg < 0) d = -d;
      auto it = r.comp.find(K);
      if (it == r.comp.end()) r.comp.emplace(K, std::move(d));
      else it->second = it->second + d;
    }
  }
  return r;
}

// Radial homotopy operator for the exterior derivative on a star-shaped ball:
//   (P u)(x) = integral over t in [0,1] of t^q (i_x u)(t x) dt
// for u of degree q+1, realized termwise.  A monomial coefficient of total
// degree D in the component dx_I contributes, for each axis l in I,
//   insertion_sign * x_l * monomial / (D + q + 1)
// to the component dx_{I \ {l}}: the t-integral of t^{q+D} is exact, so the
// operator is exact monomial calculus in any scalar field.  The result keeps
// the operand's trusted band (one degree better would also be sound; we do
// not claim it).
template <class S>
RealForm<S> poincare_operator(const RealForm<S>& u) {
  using Tr = ScalarTraits<S>;
  if (u.q < 1) throw std::logic_error("homotopy operator needs degree >= 1");
  RealForm<S> r(u.dom, u.q - 1, u.rows, u.cols, u.cap);
  for (auto& [I, m] : u.comp) {
    int pos = 0;
    for (int l = 0; l < u.dom.d; ++l) {
      if (!(I >> l & 1u)) continue;
      unsigned K = I & ~(1u << l);
      int sg = (pos % 2 == 0) ? 1 : -1;
      ++pos;
      PolyMat<S> t(m.rows, m.cols, u.dom.d, u.cap);
      for (size_t ei = 0; ei < m.e.size(); ++ei) {
        const Poly<S>& p = m.e[ei];
        Poly<S>& o = t.e[ei];
        o.dropped = p.dropped;
        o.valid = p.valid;
        for (auto& [mo, v] : p.c) {
          Mono lift = mo;
          lift.a[size_t(l)] = uint8_t(lift.a[size_t(l)] + 1);
          S w = v / Tr::from_int(long(mo.degree() + u.q));
          if (sg < 0) w = S() - w;
          o.add_term(lift, w);
        }
      }
      auto it = r.comp.find(K);
      if (it == r.comp.end()) r.comp.emplace(K, std::move(t));
      else it->second = it->second + t;
    }
  }
  return r;
}

// Curvature of the connection d + A; the flatness hypothesis is that this
// vanishes.
template <class S>
RealForm<S> curvature(const RealForm<S>& A) {
  if (A.q != 1 || A.rows != A.cols)
    throw std::logic_error("curvature needs a square degree-1 form");
  return add(exterior_deriv(A), wedge(A, A));
}

// Gauge helpers for square 0-forms, mirroring the complex layer.
template <class S>
RealForm<S> identity_plus(const RealForm<S>& theta) {
  if (theta.q != 0 || theta.rows != theta.cols)
    throw std::logic_error("identity_plus needs a square 0-form");
  RealForm<S> r = theta;
  PolyMat<S> m = r.get(0u);
  for (int i = 0; i < m.rows; ++i)
    m.at(i, i).add_term(Mono{}, ScalarTraits<S>::one());
  r.comp[0u] = std::move(m);
  return r;
}

template <class S>
RealForm<S> gauge_inverse_of_identity_plus(const RealForm<S>& theta) {
  if (theta.q != 0 || theta.rows != theta.cols)
    throw std::logic_error("gauge inverse needs a square 0-form");
  RealForm<S> r(theta.dom, 0, theta.rows, theta.cols, theta.cap);
  r.set(0u, poly_mat_inverse_of_identity_plus(theta.get(0u)));
  return r;
}

// Polynomial coefficients are global, so restriction only moves the domain
// marker (norms see the new radius).
template <class S>
RealForm<S> restrict_to(const RealForm<S>& u, double r_new) {
  if (r_new > u.dom.r + 1e-15) throw std::logic_error("restrict: radius grew");
  RealForm<S> r = u;
  r.dom.r = r_new;
  return r;
}

// ---------------------------------------------------------------- numerics

// Sup over a deterministic ball sample of the entrywise magnitude, summed
// over stored components (doubles only).
double real_sup(const RealForm<cd>& u, int samples = 2000);

// Row-sum operator norm bound for a square 0-form over the same sample.
double real_sup_operator_norm(const RealForm<cd>& u, int samples = 256);

// Weighted C^h magnitude at the form's own radius:
//   sum over components I, derivative orders |alpha| <= h of
//   S_{|alpha|} r^{|alpha| + q} sup |d^alpha u_I|.
// The real section needs plain C^h norms, no Holder seminorm.
double real_holder_norm(const RealForm<cd>& u, int h,
                        const std::vector<double>& S, int samples = 2000);

struct RealSolveConfig {
  double flat_tol = 1e-8;   // curvature magnitude accepted as flat
  double eps = kGaugeEps;   // per-step gauge band, as in the complex scheme
  int k_max = 24;
  double abs_floor = 1e-12; // stop once the scaled magnitude falls below
  int samples = 2000;

  void validate() const;
};

struct RealFlatResult {
  bool converged = false;
  std::string status;
  double radius = 0.0;       // radius actually used (halved once on demand)
  int iterations = 0;
  RealForm<cd> gauge;        // columns solve the parallel-transport equation
  RealForm<cd> gauge_inv;
  double flat_res = 0.0;     // input curvature magnitude, scaled
  double residual = 0.0;     // scaled magnitude of d g + A g at the result
  std::vector<double> trace; // per-step scaled magnitudes of the connection
};

// Fixed-radius rapid convergence for a flat connection: eta = -P(A_k), gauge
// recalibration A -> g^{-1}(d g + A g), no radius shrinking between steps.
// Rejects non-flat input with the measured curvature in the message; a gauge
// band violation shrinks the radius once and retries before giving up.
RealFlatResult solve_flat(const RealForm<cd>& A, const RealSolveConfig& cfg = {});

} // namespace dbf

#endif
