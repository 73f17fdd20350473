#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "dbarforge/realcase.hpp"
#include "test_support.hpp"

using namespace dbf;
using dbftest::Rng;
using dbftest::random_scalar;

namespace {

// Random real polynomial: only the x-exponent block is populated.
template <class S>
Poly<S> random_real_poly(Rng& rng, int d, int cap, int deg, int terms = 3) {
  Poly<S> p(d, cap);
  for (int t = 0; t < terms; ++t) {
    Mono m;
    int budget = deg;
    for (int i = 0; i < d; ++i) {
      int a = rng.uniform(budget + 1);
      m.a[size_t(i)] = uint8_t(a);
      budget -= a;
    }
    p.add_term(m, random_scalar<S>(rng));
  }
  return p;
}

template <class S>
RealForm<S> random_real_form(Rng& rng, RealBall dom, int q, int rows, int cols,
                             int cap, int deg, int terms = 2) {
  RealForm<S> f(dom, q, rows, cols, cap);
  for (unsigned key : component_keys(dom.d, q)) {
    PolyMat<S> m(rows, cols, dom.d, cap);
    for (auto& e : m.e) e = random_real_poly<S>(rng, dom.d, cap, deg, terms);
    f.set(key, std::move(m));
  }
  return f;
}

// coefficientwise equality through the zero test of the difference
template <class S>
bool exactly_zero(const RealForm<S>& f) {
  return f.is_zero_stored();
}

Poly<cd> scalar_mono(int d, int cap, std::initializer_list<int> exps, double v) {
  Poly<cd> p(d, cap);
  Mono m;
  int i = 0;
  for (int e : exps) m.a[size_t(i++)] = uint8_t(e);
  p.add_term(m, cd(v, 0.0));
  return p;
}

RealForm<cd> scalar_one_form(RealBall dom, int cap, const Poly<cd>& c0,
                             const Poly<cd>& c1) {
  RealForm<cd> f(dom, 1, 1, 1, cap);
  PolyMat<cd> m0(1, 1, dom.d, cap), m1(1, 1, dom.d, cap);
  m0.e[0] = c0;
  m1.e[0] = c1;
  f.set(1u, std::move(m0));
  f.set(2u, std::move(m1));
  return f;
}

} // namespace

TEST_CASE("homotopy operator on the coordinate differential gives the coordinate") {
  RealBall dom{2, 1.0};
  RealForm<RatComplex> u(dom, 1, 1, 1, 8);
  PolyMat<RatComplex> m(1, 1, 2, 8);
  m.e[0] = Poly<RatComplex>::constant(2, 8, RatComplex(1));
  u.set(1u, std::move(m)); // dx_1

  RealForm<RatComplex> pu = poincare_operator(u);
  Poly<RatComplex> want(2, 8);
  want.add_term(mono_z(0), RatComplex(1)); // x_1
  CHECK(pu.q == 0);
  CHECK((pu.at(0u).e[0] - want).is_zero());

  RealForm<RatComplex> zero(dom, 1, 1, 1, 8);
  CHECK(poincare_operator(zero).is_zero_stored());
}

TEST_CASE("homotopy identity is exact on the non-closed textbook form") {
  RealBall dom{2, 1.0};
  // u = x_2 dx_1: not closed, the identity must still restore it exactly
  RealForm<RatComplex> u(dom, 1, 1, 1, 8);
  PolyMat<RatComplex> m(1, 1, 2, 8);
  m.e[0].add_term(mono_z(1), RatComplex(1));
  u.set(1u, std::move(m));

  RealForm<RatComplex> back =
      add(exterior_deriv(poincare_operator(u)), poincare_operator(exterior_deriv(u)));
  CHECK(exactly_zero(sub(u, back)));
}

TEST_CASE("homotopy identity is exact across degrees, dimensions, and shapes") {
  Rng rng(2024);
  for (int d : {2, 3}) {
    RealBall dom{d, 1.0};
    for (int q1 = 1; q1 <= d; ++q1) {
      for (int rep = 0; rep < 6; ++rep) {
        auto u = random_real_form<RatComplex>(rng, dom, q1, 2, 2, 12, 5);
        auto back = add(exterior_deriv(poincare_operator(u)),
                        poincare_operator(exterior_deriv(u)));
        CHECK(exactly_zero(sub(u, back)));
      }
    }
  }
}

TEST_CASE("exterior derivative squares to zero and satisfies the Leibniz rule") {
  Rng rng(7);
  RealBall dom{3, 1.0};
  for (int rep = 0; rep < 6; ++rep) {
    auto f = random_real_form<RatComplex>(rng, dom, 0, 2, 2, 12, 4);
    CHECK(exactly_zero(exterior_deriv(exterior_deriv(f))));

    auto u = random_real_form<RatComplex>(rng, dom, 1, 2, 2, 12, 4);
    auto v = random_real_form<RatComplex>(rng, dom, 1, 2, 2, 12, 4);
    // d(u ^ v) = du ^ v - u ^ dv for degree-1 u
    auto lhs = exterior_deriv(wedge(u, v));
    auto rhs = sub(wedge(exterior_deriv(u), v), wedge(u, exterior_deriv(v)));
    CHECK(exactly_zero(sub(lhs, rhs)));
  }
}

TEST_CASE("gauge inverse is exact in the truncated algebra") {
  Rng rng(19);
  RealBall dom{2, 1.0};
  auto theta = random_real_form<RatComplex>(rng, dom, 0, 2, 2, 10, 3);
  // strip the constant part so I + theta is a unipotent-style perturbation
  PolyMat<RatComplex> m = theta.get(0u);
  for (auto& p : m.e) p.set(Mono{}, RatComplex(0));
  theta.set(0u, std::move(m));

  auto g = identity_plus(theta);
  auto gi = gauge_inverse_of_identity_plus(theta);
  auto prod = wedge(g, gi);
  // product minus identity must vanish inside the trusted band
  PolyMat<RatComplex> pm = prod.get(0u);
  for (int i = 0; i < 2; ++i) pm.at(i, i).add_term(Mono{}, RatComplex(-1));
  int band = prod.trusted_degree();
  for (auto& p : pm.e) CHECK(p.zero_in_band(band));
}

TEST_CASE("homotopy bound: one constant covers every tested regularity") {
  Rng rng(31);
  RealBall dom{2, 1.0};
  std::vector<double> S{1.0, 0.5, 0.125, 0.015625};
  double cmin = std::numeric_limits<double>::infinity(), cmax = 0.0;
  for (int h = 0; h <= 2; ++h) {
    double ch = 0.0;
    Rng suite(31); // same suite for every h
    for (int rep = 0; rep < 5; ++rep) {
      auto u = random_real_form<cd>(suite, dom, 1, 1, 1, 12, 4, 3);
      double nu = real_holder_norm(u, h, S, 400);
      if (nu == 0.0) continue;
      double np = real_holder_norm(poincare_operator(u), h, S, 400);
      ch = std::max(ch, np / nu);
    }
    (void)rng;
    cmin = std::min(cmin, ch);
    cmax = std::max(cmax, ch);
  }
  MESSAGE("fitted homotopy constants span [" << cmin << ", " << cmax << "]");
  CHECK(cmax < 8.0);
  CHECK(cmax < 2.0 * cmin);
}

TEST_CASE("manufactured flat connection has exactly vanishing curvature") {
  RealBall dom{2, 1.0};
  int cap = 12;
  // G = [[1 + p q, p], [q, 1]] with det 1; A = -dG G^{-1} is polynomial
  Poly<RatComplex> p(2, cap), q(2, cap);
  p.add_term(mono_z(0), RatComplex::make(3, 10, 0, 1));
  q.add_term(mono_z(1), RatComplex::make(1, 4, 0, 1));
  RealForm<RatComplex> gref(dom, 0, 2, 2, cap);
  PolyMat<RatComplex> gm(2, 2, 2, cap);
  gm.at(0, 0) = Poly<RatComplex>::constant(2, cap, RatComplex(1)) + p * q;
  gm.at(0, 1) = p;
  gm.at(1, 0) = q;
  gm.at(1, 1) = Poly<RatComplex>::constant(2, cap, RatComplex(1));
  gref.set(0u, std::move(gm));

  RealForm<RatComplex> gref_inv(dom, 0, 2, 2, cap);
  PolyMat<RatComplex> gi(2, 2, 2, cap);
  gi.at(0, 0) = Poly<RatComplex>::constant(2, cap, RatComplex(1));
  gi.at(0, 1) = -p;
  gi.at(1, 0) = -q;
  gi.at(1, 1) = Poly<RatComplex>::constant(2, cap, RatComplex(1)) + p * q;
  gref_inv.set(0u, std::move(gi));

  CHECK(exactly_zero(sub(wedge(gref, gref_inv),
                         identity_plus(RealForm<RatComplex>(dom, 0, 2, 2, cap)))));

  auto A = neg(wedge(exterior_deriv(gref), gref_inv));
  CHECK(exactly_zero(curvature(A)));
}

TEST_CASE("flat solver returns the identity frame on the zero connection") {
  RealBall dom{2, 1.0};
  RealForm<cd> A(dom, 1, 1, 1, 12);
  RealFlatResult res = solve_flat(A);
  CHECK(res.converged);
  CHECK(res.iterations == 0);
  CHECK(res.radius == 1.0);
  CHECK(res.residual == 0.0);
  CHECK(sub(res.gauge, identity_plus(RealForm<cd>(dom, 0, 1, 1, 12))).max_coeff_abs() == 0.0);
}

TEST_CASE("flat solver recovers the exponential frame after one radius shrink") {
  RealBall dom{2, 1.0};
  int cap = 24;
  // A = -d(e^{x y}) e^{-x y} = -(y dx + x dy): polynomial and exactly flat
  auto A = scalar_one_form(dom, cap, scalar_mono(2, cap, {0, 1}, -1.0),
                           scalar_mono(2, cap, {1, 0}, -1.0));
  RealFlatResult res = solve_flat(A);
  CHECK(res.converged);
  // the full ball needs a first gauge of magnitude sup|x y| = 1/2 >= the band
  CHECK(res.radius == 0.5);
  MESSAGE("iterations = " << res.iterations << ", residual = " << res.residual
                          << ", steps " << res.trace.size());
  CHECK(res.residual <= 1e-6);

  // the parallel frame normalized at the origin is e^{x y}; compare termwise
  const PolyMat<cd>& g = res.gauge.at(0u);
  double worst = 0.0;
  double fact = 1.0;
  for (int j = 0; j * 2 <= cap - 4; ++j) {
    if (j > 0) fact *= j;
    Mono m;
    m.a[0] = m.a[1] = uint8_t(j);
    worst = std::max(worst, std::abs(g.e[0].get(m) - cd(1.0 / fact, 0.0)));
  }
  MESSAGE("largest coefficient gap against the exponential series = " << worst);
  CHECK(worst <= 1e-6);
}

TEST_CASE("flat solver recovers a matrix gauge at the full radius") {
  RealBall dom{2, 1.0};
  int cap = 24;
  Poly<cd> p = scalar_mono(2, cap, {1, 0}, 0.3);
  Poly<cd> q = scalar_mono(2, cap, {0, 1}, 0.25);
  RealForm<cd> gref(dom, 0, 2, 2, cap);
  PolyMat<cd> gm(2, 2, 2, cap);
  gm.at(0, 0) = Poly<cd>::constant(2, cap, cd(1.0, 0.0)) + p * q;
  gm.at(0, 1) = p;
  gm.at(1, 0) = q;
  gm.at(1, 1) = Poly<cd>::constant(2, cap, cd(1.0, 0.0));
  gref.set(0u, std::move(gm));
  RealForm<cd> gref_inv(dom, 0, 2, 2, cap);
  PolyMat<cd> gi(2, 2, 2, cap);
  gi.at(0, 0) = Poly<cd>::constant(2, cap, cd(1.0, 0.0));
  gi.at(0, 1) = -p;
  gi.at(1, 0) = -q;
  gi.at(1, 1) = Poly<cd>::constant(2, cap, cd(1.0, 0.0)) + p * q;
  gref_inv.set(0u, std::move(gi));

  auto A = neg(wedge(exterior_deriv(gref), gref_inv));
  RealFlatResult res = solve_flat(A);
  CHECK(res.converged);
  CHECK(res.radius == 1.0);
  CHECK(res.residual <= 1e-6);
  double gap = sub(res.gauge, gref).max_coeff_abs();
  MESSAGE("residual = " << res.residual << ", frame recovery gap = " << gap);
  CHECK(gap <= 1e-6);

  // returned inverse really inverts the returned frame
  auto prod = wedge(res.gauge, res.gauge_inv);
  auto one = identity_plus(RealForm<cd>(dom, 0, 2, 2, cap));
  CHECK(sub(prod, one).max_coeff_abs() <= 1e-10);
}

TEST_CASE("non-flat connection is rejected with its curvature magnitude") {
  RealBall dom{2, 1.0};
  // A = x dy: dA = dx ^ dy does not vanish
  auto A = scalar_one_form(dom, 12, Poly<cd>(2, 12), scalar_mono(2, 12, {1, 0}, 1.0));
  try {
    solve_flat(A);
    FAIL("expected the flatness rejection");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("not flat") != std::string::npos);
  }
}

TEST_CASE("flat solver validates its input surface") {
  RealBall dom{2, 1.0};
  RealSolveConfig cfg;
  cfg.flat_tol = 0.0;
  RealForm<cd> A(dom, 1, 1, 1, 12);
  CHECK_THROWS_AS(solve_flat(A, cfg), std::invalid_argument); // bad config

  RealForm<cd> two(dom, 2, 1, 1, 12);
  CHECK_THROWS_AS(solve_flat(two), std::invalid_argument); // wrong degree

  RealForm<cd> rect(dom, 1, 2, 3, 12);
  CHECK_THROWS_AS(solve_flat(rect), std::invalid_argument); // not square

  // a conjugate-block exponent cannot belong to a real field
  RealForm<cd> fake(dom, 1, 1, 1, 12);
  PolyMat<cd> m(1, 1, 2, 12);
  m.e[0].add_term(mono_zbar(0), cd(0.1, 0.0));
  fake.set(1u, std::move(m));
  CHECK_THROWS_AS(solve_flat(fake), std::invalid_argument);
}
