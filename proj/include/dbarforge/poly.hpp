#ifndef DBARFORGE_POLY_HPP
#define DBARFORGE_POLY_HPP

// Truncated multivariate polynomials in z_1..z_n and conj(z_1)..conj(z_n).
//
// Every polynomial carries a degree cap.  Ring operations drop monomials above
// the cap and record that they did (`dropped`).  `valid` is the largest total
// degree up to which the stored coefficients are guaranteed to agree with the
// untruncated result of the whole preceding computation; identity tests compare
// coefficients only inside the common valid band.  A freshly constructed
// polynomial is "entire": its representation is the exact object (valid is
// unbounded).  The one operation that consumes validity is differentiation of
// an already-truncated polynomial, which pulls unknown higher coefficients down
// by one degree.

#include <algorithm>
#include <array>
#include <cstdint>
#include <limits>
#include <map>
#include <stdexcept>
#include <vector>

#include "dbarforge/scalars.hpp"

namespace dbf {

constexpr int kMaxVars = 4;          // complex dimensions supported by the key
constexpr int kValidEntire = std::numeric_limits<int>::max();

// Monomial z^a * conj(z)^b.
struct Mono {
  std::array<uint8_t, kMaxVars> a{}; // z exponents
  std::array<uint8_t, kMaxVars> b{}; // conj(z) exponents

  int degree() const {
    int d = 0;
    for (int i = 0; i < kMaxVars; ++i) d += a[i] + b[i];
    return d;
  }
  bool operator<(const Mono& o) const {
    if (a != o.a) return a < o.a;
    return b < o.b;
  }
  bool operator==(const Mono& o) const { return a == o.a && b == o.b; }
};

inline Mono mono_z(int j) { Mono m; m.a[j] = 1; return m; }
inline Mono mono_zbar(int j) { Mono m; m.b[j] = 1; return m; }

template <class S>
struct Poly {
  using Tr = ScalarTraits<S>;

  int n = 1;         // number of complex variables
  int cap = 12;      // total-degree cap
  bool dropped = false;
  int valid = kValidEntire;
  std::map<Mono, S> c;

  Poly() = default;
  Poly(int n_, int cap_) : n(n_), cap(cap_) {}

  static Poly constant(int n_, int cap_, const S& v) {
    Poly p(n_, cap_);
    if (!Tr::is_zero(v)) p.c[Mono{}] = v;
    return p;
  }

  bool is_zero() const { return c.empty(); }

  // Largest degree whose coefficients may be trusted (cap if anything dropped).
  int trusted_degree() const { return valid == kValidEntire ? cap : std::min(valid, cap); }

  void set(const Mono& m, const S& v) {
    if (m.degree() > cap) { dropped = true; valid = std::min(valid, cap); return; }
    if (Tr::is_zero(v)) c.erase(m);
    else c[m] = v;
  }

  S get(const Mono& m) const {
    auto it = c.find(m);
    return it == c.end() ? Tr::zero() : it->second;
  }

  void add_term(const Mono& m, const S& v) {
    if (Tr::is_zero(v)) return;
    if (m.degree() > cap) { dropped = true; valid = std::min(valid, cap); return; }
    auto it = c.find(m);
    if (it == c.end()) c.emplace(m, v);
    else {
      it->second += v;
      if (Tr::is_zero(it->second)) c.erase(it);
    }
  }

  Poly& operator+=(const Poly& o) {
    merge_flags(o);
    for (auto& [m, v] : o.c) add_term(m, v);
    return *this;
  }
  Poly& operator-=(const Poly& o) {
    merge_flags(o);
    for (auto& [m, v] : o.c) add_term(m, S() - v);
    return *this;
  }
  Poly operator+(const Poly& o) const { Poly r = *this; r += o; return r; }
  Poly operator-(const Poly& o) const { Poly r = *this; r -= o; return r; }
  Poly operator-() const {
    Poly r = *this;
    for (auto& [m, v] : r.c) v = S() - v;
    return r;
  }

  Poly operator*(const Poly& o) const {
    Poly r(n, cap);
    // A stored zero that was never truncated multiplies to an exact zero, so
    // it must not inherit the other factor's provenance.
    if ((c.empty() && !dropped && valid == kValidEntire) ||
        (o.c.empty() && !o.dropped && o.valid == kValidEntire))
      return r;
    r.dropped = dropped || o.dropped;
    r.valid = std::min(valid, o.valid);
    for (auto& [ma, va] : c) {
      int da = ma.degree();
      for (auto& [mb, vb] : o.c) {
        if (da + mb.degree() > cap) { r.dropped = true; r.valid = std::min(r.valid, cap); continue; }
        Mono m;
        for (int i = 0; i < kMaxVars; ++i) {
          m.a[i] = uint8_t(ma.a[i] + mb.a[i]);
          m.b[i] = uint8_t(ma.b[i] + mb.b[i]);
        }
        r.add_term(m, va * vb);
      }
    }
    return r;
  }

  Poly scaled(const S& v) const {
    Poly r = *this;
    if (Tr::is_zero(v)) { r.c.clear(); return r; }
    for (auto& [m, w] : r.c) w = w * v;
    return r;
  }

  // d/dz_j and d/d conj(z_j).  Differentiating a truncated polynomial loses one
  // degree of trust.
  Poly dz(int j) const { return deriv(j, /*bar=*/false); }
  Poly dzbar(int j) const { return deriv(j, /*bar=*/true); }

  // Real-coordinate derivatives: z_j = x_j + i y_j, so
  //   d/dx_j = d/dz_j + d/dzbar_j,   d/dy_j = i (d/dz_j - d/dzbar_j).
  Poly dx(int j) const { return dz(j) + dzbar(j); }
  Poly dy(int j) const {
    Poly r = (dz(j) - dzbar(j));
    S i_unit = imaginary_unit();
    return r.scaled(i_unit);
  }

  // Substitute z -> rho * z (real rho); exact rescaling used by the dilation
  // pullback.  Only available over doubles.
  Poly dilated(double rho) const {
    Poly r(n, cap);
    r.dropped = dropped;
    r.valid = valid;
    for (auto& [m, v] : c) {
      double f = 1.0;
      for (int i = 0; i < kMaxVars; ++i)
        for (int k = 0; k < m.a[i] + m.b[i]; ++k) f *= rho;
      r.c[m] = v * S(f);
    }
    return r;
  }

  S eval(const std::array<cd, kMaxVars>& z) const;

  double max_coeff_abs() const {
    double m = 0.0;
    for (auto& [mo, v] : c) m = std::max(m, Tr::abs_approx(v));
    return m;
  }

  double max_coeff_abs_in_band(int deg_cap) const {
    double m = 0.0;
    for (auto& [mo, v] : c)
      if (mo.degree() <= deg_cap) m = std::max(m, Tr::abs_approx(v));
    return m;
  }

  bool zero_in_band(int deg_cap) const {
    for (auto& [mo, v] : c)
      if (mo.degree() <= deg_cap && !Tr::is_zero(v)) return false;
    return true;
  }

  int degree() const {
    int d = 0;
    for (auto& [m, v] : c) d = std::max(d, m.degree());
    return d;
  }

private:
  void merge_flags(const Poly& o) {
    dropped = dropped || o.dropped;
    valid = std::min(valid, o.valid);
  }

  static S imaginary_unit() {
    if constexpr (Tr::exact) return RatComplex(mpq_class(0), mpq_class(1));
    else return S(0.0, 1.0);
  }

  Poly deriv(int j, bool bar) const {
    Poly r(n, cap);
    r.dropped = dropped;
    r.valid = (valid == kValidEntire) ? kValidEntire : valid - 1;
    for (auto& [m, v] : c) {
      int e = bar ? m.b[j] : m.a[j];
      if (e == 0) continue;
      Mono d = m;
      if (bar) d.b[j] = uint8_t(e - 1);
      else d.a[j] = uint8_t(e - 1);
      r.add_term(d, v * Tr::from_int(e));
    }
    return r;
  }
};

template <>
inline cd Poly<cd>::eval(const std::array<cd, kMaxVars>& z) const {
  // Horner is awkward on sparse multivariate data; plain power products are
  // fine at the sizes we use (few dozen terms).
  cd acc = 0.0;
  for (auto& [m, v] : c) {
    cd t = v;
    for (int i = 0; i < n; ++i) {
      for (int k = 0; k < m.a[i]; ++k) t *= z[i];
      for (int k = 0; k < m.b[i]; ++k) t *= std::conj(z[i]);
    }
    acc += t;
  }
  return acc;
}

template <>
inline RatComplex Poly<RatComplex>::eval(const std::array<cd, kMaxVars>&) const {
  throw std::logic_error("eval over rationals is not defined");
}

// ------------------------------------------------------------- poly matrices

template <class S>
struct PolyMat {
  int rows = 0, cols = 0;
  std::vector<Poly<S>> e; // row-major

  PolyMat() = default;
  PolyMat(int r, int c, int n, int cap) : rows(r), cols(c), e(size_t(r) * c, Poly<S>(n, cap)) {}

  Poly<S>& at(int i, int j) { return e[size_t(i) * cols + j]; }
  const Poly<S>& at(int i, int j) const { return e[size_t(i) * cols + j]; }

  static PolyMat identity(int r, int n, int cap) {
    PolyMat m(r, r, n, cap);
    for (int i = 0; i < r; ++i) m.at(i, i) = Poly<S>::constant(n, cap, ScalarTraits<S>::one());
    return m;
  }

  PolyMat operator+(const PolyMat& o) const {
    PolyMat r = *this;
    for (size_t i = 0; i < e.size(); ++i) r.e[i] += o.e[i];
    return r;
  }
  PolyMat operator-(const PolyMat& o) const {
    PolyMat r = *this;
    for (size_t i = 0; i < e.size(); ++i) r.e[i] -= o.e[i];
    return r;
  }
  PolyMat operator-() const {
    PolyMat r = *this;
    for (auto& p : r.e) p = -p;
    return r;
  }

  PolyMat operator*(const PolyMat& o) const {
    if (cols != o.rows) throw std::logic_error("poly matrix shape mismatch");
    int n = e.empty() ? (o.e.empty() ? 1 : o.e[0].n) : e[0].n;
    int cap = e.empty() ? (o.e.empty() ? 12 : o.e[0].cap) : e[0].cap;
    PolyMat r(rows, o.cols, n, cap);
    for (int i = 0; i < rows; ++i)
      for (int k = 0; k < cols; ++k) {
        const Poly<S>& a = at(i, k);
        if (a.is_zero() && !a.dropped && a.valid == kValidEntire) continue;
        for (int j = 0; j < o.cols; ++j) r.at(i, j) += a * o.at(k, j);
      }
    return r;
  }

  PolyMat scaled(const S& v) const {
    PolyMat r = *this;
    for (auto& p : r.e) p = p.scaled(v);
    return r;
  }

  bool is_zero() const {
    for (auto& p : e) if (!p.is_zero()) return false;
    return true;
  }

  int min_valid() const {
    int v = kValidEntire;
    for (auto& p : e) v = std::min(v, p.valid);
    return v;
  }
  bool any_dropped() const {
    for (auto& p : e) if (p.dropped) return true;
    return false;
  }
};

// Inverse of g = I + E in the truncated polynomial algebra.  Split E into its
// constant part E0 and the rest; (I + E0) is inverted as a plain matrix, and
// the remaining Neumann series terminates because each factor raises the
// minimal monomial degree.  The result is the exact inverse modulo monomials
// above the cap.
template <class S>
PolyMat<S> poly_mat_inverse_of_identity_plus(const PolyMat<S>& E) {
  using Tr = ScalarTraits<S>;
  if (E.rows != E.cols) throw std::logic_error("inverse needs a square matrix");
  int p = E.rows;
  int n = E.e.empty() ? 1 : E.e[0].n;
  int cap = E.e.empty() ? 12 : E.e[0].cap;

  // constant part
  std::vector<S> a(size_t(p) * p, Tr::zero());
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j) {
      a[size_t(i) * p + j] = E.at(i, j).get(Mono{});
      if (i == j) a[size_t(i) * p + j] += Tr::one();
    }
  // Gauss-Jordan on the constant block (exact over rationals, standard over
  // doubles; pivots are nonzero whenever I + E0 is invertible).
  std::vector<S> inv(size_t(p) * p, Tr::zero());
  for (int i = 0; i < p; ++i) inv[size_t(i) * p + i] = Tr::one();
  for (int col = 0; col < p; ++col) {
    int piv = -1;
    double best = 0.0;
    for (int i = col; i < p; ++i) {
      double m = Tr::abs_approx(a[size_t(i) * p + col]);
      if (m > best) { best = m; piv = i; }
    }
    if (piv < 0) throw std::runtime_error("gauge constant part is singular");
    if (piv != col)
      for (int j = 0; j < p; ++j) {
        std::swap(a[size_t(piv) * p + j], a[size_t(col) * p + j]);
        std::swap(inv[size_t(piv) * p + j], inv[size_t(col) * p + j]);
      }
    S d = a[size_t(col) * p + col];
    for (int j = 0; j < p; ++j) {
      a[size_t(col) * p + j] = a[size_t(col) * p + j] / d;
      inv[size_t(col) * p + j] = inv[size_t(col) * p + j] / d;
    }
    for (int i = 0; i < p; ++i) {
      if (i == col) continue;
      S f = a[size_t(i) * p + col];
      if (Tr::is_zero(f)) continue;
      for (int j = 0; j < p; ++j) {
        a[size_t(i) * p + j] = a[size_t(i) * p + j] - f * a[size_t(col) * p + j];
        inv[size_t(i) * p + j] = inv[size_t(i) * p + j] - f * inv[size_t(col) * p + j];
      }
    }
  }

  PolyMat<S> C0(p, p, n, cap); // (I + E0)^{-1}
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j)
      C0.at(i, j) = Poly<S>::constant(n, cap, inv[size_t(i) * p + j]);

  // Etil = E - E0 has no constant term.
  PolyMat<S> Etil = E;
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j) {
      Poly<S>& q = Etil.at(i, j);
      auto it = q.c.find(Mono{});
      if (it != q.c.end()) q.c.erase(it);
    }

  // (I + C0*Etil)^{-1} = sum over j of (-C0*Etil)^j, finite in the quotient.
  PolyMat<S> A = (C0 * Etil).scaled(S() - Tr::one());
  PolyMat<S> acc = PolyMat<S>::identity(p, n, cap);
  PolyMat<S> pw = A;
  bool series_truncated = false;
  for (int j = 1; j <= cap; ++j) {
    if (pw.is_zero()) break;
    acc = acc + pw;
    if (j == cap && !pw.is_zero()) series_truncated = true;
    if (j < cap) pw = pw * A;
  }
  PolyMat<S> r = acc * C0;
  if (series_truncated) {
    // The true inverse continues beyond the cap; stored coefficients are still
    // exact, so only the entirety flag changes.
    for (auto& q : r.e) {
      q.dropped = true;
      q.valid = std::min(q.valid, q.cap);
    }
  }
  return r;
}

} // namespace dbf

#endif
