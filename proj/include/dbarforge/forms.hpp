#ifndef DBARFORGE_FORMS_HPP
#define DBARFORGE_FORMS_HPP

// Matrix-valued (0,q)-forms on closed balls, polynomial representation.
// Components are stored per increasing multi-index (bitmask); a missing
// component is zero.  Values are immutable in spirit: operations return new
// forms.

#include <map>
#include <stdexcept>

#include "dbarforge/ball.hpp"
#include "dbarforge/poly.hpp"

namespace dbf {

template <class S>
struct PolyForm {
  BallDomain dom;
  int q = 0;
  int rows = 1, cols = 1;
  int cap = 12;
  std::map<unsigned, PolyMat<S>> comp;

  PolyForm() = default;
  PolyForm(BallDomain d, int q_, int r_, int c_, int cap_ = 12)
      : dom(d), q(q_), rows(r_), cols(c_), cap(cap_) {}

  bool has(unsigned key) const { return comp.count(key) != 0; }

  const PolyMat<S>& at(unsigned key) const {
    auto it = comp.find(key);
    if (it == comp.end()) throw std::logic_error("missing component");
    return it->second;
  }

  PolyMat<S> get(unsigned key) const {
    auto it = comp.find(key);
    if (it != comp.end()) return it->second;
    return PolyMat<S>(rows, cols, dom.n, cap);
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

  // Provenance across all stored components.
  int min_valid() const {
    int v = kValidEntire;
    for (auto& [k, m] : comp) v = std::min(v, m.min_valid());
    return v;
  }
  bool any_dropped() const {
    for (auto& [k, m] : comp)
      if (m.any_dropped()) return true;
    return false;
  }
  int trusted_degree() const {
    int v = min_valid();
    return v == kValidEntire ? cap : std::min(v, cap);
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
};

template <class S>
PolyForm<S> zero_form(const BallDomain& d, int q, int rows, int cols, int cap) {
  return PolyForm<S>(d, q, rows, cols, cap);
}

template <class S>
void check_same_shape(const PolyForm<S>& a, const PolyForm<S>& b) {
  if (!(a.dom == b.dom) || a.q != b.q || a.rows != b.rows || a.cols != b.cols)
    throw std::logic_error("form shape mismatch");
}

template <class S>
PolyForm<S> add(const PolyForm<S>& a, const PolyForm<S>& b) {
  check_same_shape(a, b);
  PolyForm<S> r = a;
  for (auto& [k, m] : b.comp) {
    auto it = r.comp.find(k);
    if (it == r.comp.end()) r.comp.emplace(k, m);
    else it->second = it->second + m;
  }
  return r;
}

template <class S>
PolyForm<S> sub(const PolyForm<S>& a, const PolyForm<S>& b) {
  check_same_shape(a, b);
  PolyForm<S> r = a;
  for (auto& [k, m] : b.comp) {
    auto it = r.comp.find(k);
    if (it == r.comp.end()) r.comp.emplace(k, -m);
    else it->second = it->second - m;
  }
  return r;
}

template <class S>
PolyForm<S> neg(const PolyForm<S>& a) {
  PolyForm<S> r = a;
  for (auto& [k, m] : r.comp) m = -m;
  return r;
}

template <class S>
PolyForm<S> scale(const PolyForm<S>& a, const S& v) {
  PolyForm<S> r = a;
  for (auto& [k, m] : r.comp) m = m.scaled(v);
  return r;
}

// Wedge with matrix multiplication of the coefficients:
//   (u ^ v)_K = sum over I u J = K, I n J = 0 of sign(I,J) u_I v_J.
template <class S>
PolyForm<S> wedge(const PolyForm<S>& u, const PolyForm<S>& v) {
  if (!(u.dom == v.dom)) throw std::logic_error("wedge: domain mismatch");
  if (u.cols != v.rows) throw std::logic_error("wedge: shape mismatch");
  PolyForm<S> r(u.dom, u.q + v.q, u.rows, v.cols, u.cap);
  if (r.q > u.dom.n) return r; // degree beyond dimension is identically zero
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

// (dbar u)_K = sum over j in K of insert_sign(j, K \ {j}) d u_{K\{j}} / dzbar_j.
template <class S>
PolyForm<S> dbar(const PolyForm<S>& u) {
  PolyForm<S> r(u.dom, u.q + 1, u.rows, u.cols, u.cap);
  if (r.q > u.dom.n) return r;
  for (auto& [I, m] : u.comp) {
    for (int j = 0; j < u.dom.n; ++j) {
      if (I >> j & 1u) continue;
      unsigned K = I | (1u << j);
      int sg = insert_sign(j, I);
      PolyMat<S> d(m.rows, m.cols, u.dom.n, u.cap);
      for (size_t t = 0; t < m.e.size(); ++t) d.e[t] = m.e[t].dzbar(j);
      if (sg < 0) d = -d;
      auto it = r.comp.find(K);
      if (it == r.comp.end()) r.comp.emplace(K, std::move(d));
      else it->second = it->second + d;
    }
  }
  return r;
}

// Radius change.  Polynomial coefficients are global, so restriction only
// moves the domain marker (norms see the new radius).
template <class S>
PolyForm<S> restrict_to(const PolyForm<S>& u, double r_new) {
  if (r_new > u.dom.r + 1e-15) throw std::logic_error("restrict: radius grew");
  PolyForm<S> r = u;
  r.dom.r = r_new;
  return r;
}

// Pullback under z -> rho z (PolyRep side of the dilation conjugation).  The
// dzbar_I frame picks up rho^{|I|}.
inline PolyForm<cd> dilate_pullback(const PolyForm<cd>& u, double rho) {
  PolyForm<cd> r = u;
  r.dom.r = u.dom.r / rho;
  double frame = 1.0;
  for (int i = 0; i < u.q; ++i) frame *= rho;
  for (auto& [k, m] : r.comp)
    for (auto& p : m.e) p = p.dilated(rho).scaled(cd(frame, 0.0));
  return r;
}

// Evaluate one component matrix at a point (doubles only).
inline void eval_component(const PolyForm<cd>& u, unsigned key,
                           const std::array<cd, kMaxVars>& z, cd* out) {
  auto it = u.comp.find(key);
  if (it == u.comp.end()) {
    for (int i = 0; i < u.rows * u.cols; ++i) out[i] = 0.0;
    return;
  }
  for (int i = 0; i < u.rows * u.cols; ++i) out[i] = it->second.e[i].eval(z);
}

// Gauge helpers for 0-forms: g = I + theta with theta the top-degree-zero
// block of a parameter.  Over PolyRep the inverse is the truncated-algebra
// inverse.
template <class S>
PolyForm<S> identity_plus(const PolyForm<S>& theta) {
  if (theta.q != 0 || theta.rows != theta.cols)
    throw std::logic_error("identity_plus needs a square 0-form");
  PolyForm<S> r = theta;
  PolyMat<S> m = r.get(0u);
  for (int i = 0; i < m.rows; ++i)
    m.at(i, i).add_term(Mono{}, ScalarTraits<S>::one());
  r.set(0u, std::move(m));
  return r;
}

template <class S>
PolyForm<S> gauge_inverse_of_identity_plus(const PolyForm<S>& theta) {
  if (theta.q != 0 || theta.rows != theta.cols)
    throw std::logic_error("gauge inverse needs a square 0-form");
  PolyForm<S> r(theta.dom, 0, theta.rows, theta.cols, theta.cap);
  r.set(0u, poly_mat_inverse_of_identity_plus(theta.get(0u)));
  return r;
}

} // namespace dbf

#endif
