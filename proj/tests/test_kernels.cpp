#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "dbarforge/kernels.hpp"
#include "test_support.hpp"

using namespace dbf;

namespace {

PolyForm<cd> mono_form(BallDomain dom, int q, unsigned key, Mono mo, cd c) {
  PolyForm<cd> f(dom, q, 1, 1, 12);
  PolyMat<cd> m(1, 1, dom.n, 12);
  Poly<cd> p(dom.n, 12);
  p.add_term(mo, c);
  m.at(0, 0) = std::move(p);
  f.set(key, std::move(m));
  return f;
}

// scalar (0,1)-form on the disk built from a pointwise coefficient function
GridForm disk_form(GridSpecPtr sp, cd (*f)(cd)) {
  return grid_from_fn(sp, 1, 1, 1,
                      [f](const std::array<double, 2 * kMaxVars>& x, unsigned, cd* out) {
    out[0] = f(cd(x[0], x[1]));
  });
}

cd smooth_a(cd z) {
  double x = z.real(), y = z.imag();
  return cd(std::exp(0.8 * x - 0.4 * y), std::cos(0.7 * x + 0.3 * y));
}
cd smooth_b(cd z) {
  double x = z.real(), y = z.imag();
  return cd(std::sin(1.1 * x) * std::cosh(0.5 * y), 0.2 * x * x - y);
}

} // namespace

TEST_CASE("volume transform of a zero form is zero") {
  for (int n = 1; n <= 2; ++n) {
    auto sp = make_grid(n, 1.0, n == 1 ? 9 : 7);
    GridForm z = grid_zero(sp, 1, 2, 2);
    GridForm Tz = bm_volume_transform(z, 0.6, KernelConfig{});
    CHECK(Tz.q == 0);
    CHECK(Tz.max_abs() == 0.0);
  }
}

TEST_CASE("constant coefficient form maps to the conjugate coordinate") {
  // On any disk the kernel reproduces conj(z) from the form with unit
  // coefficient, which pins the normalization.
  KernelConfig cfg;
  dbftest::Rng rng(11);
  for (double r : {1.0, 2.0}) {
    BallDomain dom{1, r};
    auto u = mono_form(dom, 1, 1u, Mono{}, cd(1, 0));
    GridForm Tu = bm_volume_transform(u, 0.5 * r, 17, cfg);
    for (int p = 0; p < 10; ++p) {
      double th = rng.real(0.0, 6.28);
      double rad = rng.real(0.0, 0.45 * r);
      double x[2] = {rad * std::cos(th), rad * std::sin(th)};
      cd got;
      eval_component(Tu, 0u, x, &got);
      CHECK(std::abs(got - cd(x[0], -x[1])) < 1e-6);
    }
  }
}

TEST_CASE("volume transform agrees with a cartesian midpoint oracle") {
  // Independent discretization of the same singular integral: midpoint rule
  // on a uniform mesh of the disk, singularity left to cancel by symmetry.
  BallDomain dom{1, 1.0};
  Mono zb;
  zb.b[0] = 1;
  auto u = mono_form(dom, 1, 1u, zb, cd(1, 0));
  GridForm Tu = bm_volume_transform(u, 0.5, 17, KernelConfig{});

  cd z(0.3, 0.0);
  int N = 1500;
  double h = 2.0 / N;
  cd acc(0, 0);
  for (int i = 0; i < N; ++i) {
    for (int j = 0; j < N; ++j) {
      cd zeta(-1.0 + (i + 0.5) * h, -1.0 + (j + 0.5) * h);
      if (std::norm(zeta) >= 1.0) continue;
      acc += std::conj(zeta) / (zeta - z);
    }
  }
  cd want = -acc * h * h / 3.14159265358979323846;
  double x[2] = {z.real(), z.imag()};
  cd got;
  eval_component(Tu, 0u, x, &got);
  CHECK(std::abs(got - want) < 5e-3);
}

TEST_CASE("transform is linear in the input") {
  auto sp = make_grid(1, 1.0, 17);
  GridForm u = disk_form(sp, smooth_a);
  GridForm v = disk_form(sp, smooth_b);
  KernelConfig cfg;
  GridForm lhs = bm_volume_transform(add(scale(u, cd(2, 0)), scale(v, cd(0, 3))), 0.6, cfg);
  GridForm rhs = add(scale(bm_volume_transform(u, 0.6, cfg), cd(2, 0)),
                     scale(bm_volume_transform(v, 0.6, cfg), cd(0, 3)));
  CHECK(sub(lhs, rhs).max_abs() < 1e-10);
}

TEST_CASE("homotopy identity on the disk, error falls with resolution") {
  KernelConfig cfg;
  HolderParams hp;
  double prev = 0.0;
  int level = 0;
  for (int m : {17, 33}) {
    GridForm u = disk_form(make_grid(1, 1.0, m), smooth_a);
    double res = homotopy_residual(u, 0.35, level ? cfg.scaled(1.5) : cfg, hp);
    if (level) {
      CHECK(res < prev);
      CHECK(res <= 5e-3);
    }
    prev = res;
    ++level;
  }
}

TEST_CASE("homotopy identity in two variables") {
  KernelConfig cfg;
  HolderParams hp;
  BallDomain dom{2, 1.0};

  SUBCASE("closed constant form, sphere correction included") {
    auto u = mono_form(dom, 1, 0b01u, Mono{}, cd(1, 0));
    GridForm ug = to_grid(u, make_grid(2, 1.0, 9));
    CHECK(homotopy_residual(ug, 0.4, cfg, hp) <= 2.5e-2);
  }
  SUBCASE("top degree input, polynomial data stays exact") {
    Mono zb1;
    zb1.b[0] = 1;
    auto u = mono_form(dom, 2, 0b11u, zb1, cd(1, 0));
    GridForm ug = to_grid(u, make_grid(2, 1.0, 9));
    CHECK(homotopy_residual(ug, 0.4, cfg, hp) <= 1e-10);
  }
  SUBCASE("non closed form exercises every kernel block") {
    Mono zb2;
    zb2.b[1] = 1;
    auto u = mono_form(dom, 1, 0b01u, zb2, cd(1, 0));
    GridForm ug = to_grid(u, make_grid(2, 1.0, 9));
    CHECK(homotopy_residual(ug, 0.4, cfg, hp) <= 3e-2);
  }
}

TEST_CASE("sphere correction vanishes where the kernel family is empty") {
  KernelConfig cfg;
  SUBCASE("one variable") {
    GridForm u = disk_form(make_grid(1, 1.0, 17), smooth_a);
    CHECK(boundary_transform(u, 0.6, cfg).max_abs() == 0.0);
  }
  SUBCASE("top degree in two variables") {
    auto sp = make_grid(2, 1.0, 7);
    GridForm u = grid_from_fn(
        sp, 2, 1, 1, [](const std::array<double, 2 * kMaxVars>& x, unsigned, cd* out) {
      out[0] = cd(x[0] * x[2], x[1]);
    });
    CHECK(boundary_transform(u, 0.6, cfg).max_abs() == 0.0);
  }
  SUBCASE("coefficients supported away from the sphere") {
    auto sp = make_grid(2, 1.0, 9);
    GridForm u = grid_from_fn(
        sp, 1, 1, 1, [](const std::array<double, 2 * kMaxVars>& x, unsigned key, cd* out) {
      double s = x[0] * x[0] + x[1] * x[1] + x[2] * x[2] + x[3] * x[3];
      double cut = 0.09;
      out[0] = s < cut ? cd(std::exp(-1.0 / (cut - s)), 0) * (key == 1u ? 1.0 : 0.5)
                       : cd(0, 0);
    });
    CHECK(boundary_transform(u, 0.6, cfg).max_abs() < 1e-10);
  }
}

TEST_CASE("interior bound fit reports stable constants") {
  auto sp = make_grid(1, 1.0, 17);
  std::vector<GridForm> suite;
  suite.push_back(disk_form(sp, smooth_a));
  suite.push_back(disk_form(sp, smooth_b));
  std::vector<int> hs{0, 1};
  std::vector<double> sigmas{0.25, 0.5};
  std::vector<double> S{1.0, 1.0, 1.0, 1.0, 1.0};
  KernelConfig cfg;
  HolderParams hp;
  auto rep = fit_interior_constant(suite, hs, sigmas, S, cfg, hp);
  CHECK(rep.c_max > 0.0);
  CHECK(std::isfinite(rep.c_max));
  CHECK(rep.c_lsq > 0.0);
  CHECK(rep.c_lsq <= rep.c_max * 2.0);
  CHECK(rep.per_h_max.size() == hs.size());
  CHECK(rep.bound_holds);

  // the ratio of norms is invariant under scaling the sample
  std::vector<GridForm> scaled;
  scaled.push_back(scale(suite[0], cd(10, 0)));
  scaled.push_back(scale(suite[1], cd(10, 0)));
  auto rep2 = fit_interior_constant(scaled, hs, sigmas, S, cfg, hp);
  CHECK(rep2.c_max == doctest::Approx(rep.c_max).epsilon(1e-9));
}
