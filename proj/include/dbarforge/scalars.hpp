#ifndef DBARFORGE_SCALARS_HPP
#define DBARFORGE_SCALARS_HPP

// Scalar fields used by the polynomial layer.  The numeric pipeline runs on
// std::complex<double>; the algebraic identity tests run on exact complex
// rationals so that "equal" means equal, not "equal up to roundoff".

#include <complex>
#include <cstdint>
#include <gmpxx.h>

namespace dbf {

using cd = std::complex<double>;

// Complex number with exact rational real and imaginary parts.
struct RatComplex {
  mpq_class re, im;

  RatComplex() : re(0), im(0) {}
  RatComplex(long r) : re(r), im(0) {}
  RatComplex(const mpq_class& r, const mpq_class& i) : re(r), im(i) {}

  static RatComplex make(long rn, long rd, long in_, long id) {
    RatComplex v;
    v.re = mpq_class(rn, rd);
    v.im = mpq_class(in_, id);
    v.re.canonicalize();
    v.im.canonicalize();
    return v;
  }

  RatComplex operator+(const RatComplex& o) const { return {re + o.re, im + o.im}; }
  RatComplex operator-(const RatComplex& o) const { return {re - o.re, im - o.im}; }
  RatComplex operator-() const { return {-re, -im}; }
  RatComplex operator*(const RatComplex& o) const {
    return {re * o.re - im * o.im, re * o.im + im * o.re};
  }
  RatComplex operator/(const RatComplex& o) const {
    mpq_class d = o.re * o.re + o.im * o.im;
    return {(re * o.re + im * o.im) / d, (im * o.re - re * o.im) / d};
  }
  RatComplex& operator+=(const RatComplex& o) { re += o.re; im += o.im; return *this; }
  RatComplex& operator-=(const RatComplex& o) { re -= o.re; im -= o.im; return *this; }
  bool operator==(const RatComplex& o) const { return re == o.re && im == o.im; }
  bool operator!=(const RatComplex& o) const { return !(*this == o); }
};

inline RatComplex conj(const RatComplex& v) { return {v.re, -v.im}; }

template <class S> struct ScalarTraits;

template <> struct ScalarTraits<cd> {
  static cd zero() { return {0.0, 0.0}; }
  static cd one() { return {1.0, 0.0}; }
  static bool is_zero(const cd& v) { return v.real() == 0.0 && v.imag() == 0.0; }
  static double abs_approx(const cd& v) { return std::abs(v); }
  static cd from_int(long k) { return {double(k), 0.0}; }
  static constexpr bool exact = false;
};

template <> struct ScalarTraits<RatComplex> {
  static RatComplex zero() { return RatComplex(); }
  static RatComplex one() { return RatComplex(1); }
  static bool is_zero(const RatComplex& v) { return v.re == 0 && v.im == 0; }
  static double abs_approx(const RatComplex& v) {
    double r = v.re.get_d(), i = v.im.get_d();
    return std::abs(cd(r, i));
  }
  static RatComplex from_int(long k) { return RatComplex(k); }
  static constexpr bool exact = true;
};

} // namespace dbf

#endif
