#include "dbarforge/realcase.hpp"

#include <array>
#include <cmath>
#include <sstream>

namespace dbf {

namespace {

// Deterministic sample points in the real ball, same generator the complex
// sampling uses so runs are reproducible across modules.
struct BallSampler {
  std::uint64_t state = 0x9e3779b97f4a7c15ull;

  double next() {
    state += 0x9e3779b97f4a7c15ull;
    std::uint64_t x = state;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return double((x ^ (x >> 31)) >> 11) * 0x1.0p-53;
  }

  // fills z with a point of the ball of radius r in R^d (imaginary parts 0)
  void point(int d, double r, std::array<cd, kMaxVars>& z) {
    while (true) {
      double rr = 0.0;
      for (int i = 0; i < d; ++i) {
        double a = (2.0 * next() - 1.0) * r;
        z[size_t(i)] = cd(a, 0.0);
        rr += a * a;
      }
      if (rr <= r * r) return;
    }
  }
};

double sup_of_mat(const PolyMat<cd>& m, int d, double r, int samples) {
  BallSampler gen;
  std::array<cd, kMaxVars> z{};
  double best = 0.0;
  for (int s = 0; s < samples; ++s) {
    gen.point(d, r, z);
    for (auto& p : m.e) best = std::max(best, std::abs(p.eval(z)));
  }
  return best;
}

PolyMat<cd> apply_axis_derivs(const PolyMat<cd>& m, const std::vector<int>& alpha) {
  PolyMat<cd> r = m;
  for (size_t ax = 0; ax < alpha.size(); ++ax)
    for (int k = 0; k < alpha[ax]; ++k)
      for (auto& p : r.e) p = p.dz(int(ax));
  return r;
}

RealForm<cd> minus_identity(const RealForm<cd>& g) {
  RealForm<cd> th = g;
  PolyMat<cd> m = th.get(0u);
  for (int i = 0; i < m.rows; ++i)
    m.at(i, i).add_term(Mono{}, cd(-1.0, 0.0));
  th.comp[0u] = std::move(m);
  return th;
}

} // namespace

double real_sup(const RealForm<cd>& u, int samples) {
  double total = 0.0;
  for (auto& [k, m] : u.comp) total += sup_of_mat(m, u.dom.d, u.dom.r, samples);
  return total;
}

double real_sup_operator_norm(const RealForm<cd>& u, int samples) {
  if (u.q != 0) throw std::logic_error("operator norm needs a 0-form");
  auto it = u.comp.find(0u);
  if (it == u.comp.end()) return 0.0;
  const PolyMat<cd>& m = it->second;
  BallSampler gen;
  std::array<cd, kMaxVars> z{};
  double best = 0.0;
  for (int s = 0; s < samples; ++s) {
    gen.point(u.dom.d, u.dom.r, z);
    for (int i = 0; i < m.rows; ++i) {
      double row = 0.0;
      for (int j = 0; j < m.cols; ++j) row += std::abs(m.at(i, j).eval(z));
      best = std::max(best, row);
    }
  }
  return best;
}

double real_holder_norm(const RealForm<cd>& u, int h,
                        const std::vector<double>& S, int samples) {
  if (h < 0 || size_t(h) >= S.size())
    throw std::invalid_argument("holder norm: weight sequence shorter than h");
  double total = 0.0;
  double rq = std::pow(u.dom.r, u.q);
  std::vector<std::vector<int>> alphas;
  for (auto& [key, m] : u.comp) {
    double rk = rq;
    for (int k = 0; k <= h; ++k) {
      alphas.clear();
      enumerate_multi_indices(u.dom.d, k, alphas);
      for (auto& alpha : alphas) {
        PolyMat<cd> dm = apply_axis_derivs(m, alpha);
        total += S[size_t(k)] * rk * sup_of_mat(dm, u.dom.d, u.dom.r, samples);
      }
      rk *= u.dom.r;
    }
  }
  return total;
}

void RealSolveConfig::validate() const {
  if (!(flat_tol > 0.0))
    throw std::invalid_argument("real solve config: flat_tol must be positive");
  if (!(eps > 0.0) || eps >= 1.0)
    throw std::invalid_argument("real solve config: eps must lie in (0, 1)");
  if (k_max < 1)
    throw std::invalid_argument("real solve config: k_max must be at least 1");
  if (!(abs_floor > 0.0))
    throw std::invalid_argument("real solve config: abs_floor must be positive");
  if (samples < 16)
    throw std::invalid_argument("real solve config: too few sample points");
}

RealFlatResult solve_flat(const RealForm<cd>& A, const RealSolveConfig& cfg) {
  cfg.validate();
  if (A.q != 1 || A.rows != A.cols)
    throw std::invalid_argument("solve_flat: the connection form must be a square degree-1 field");
  if (A.dom.d < 1 || A.dom.d > kMaxVars)
    throw std::invalid_argument("solve_flat: unsupported dimension");
  if (!(A.dom.r > 0.0))
    throw std::invalid_argument("solve_flat: radius must be positive");
  if (!A.pure_real_frame())
    throw std::invalid_argument("solve_flat: coefficients touch the conjugate exponent block");

  // flatness screen at the input radius
  double fr = A.dom.r * A.dom.r * real_sup(curvature(A), cfg.samples);
  if (fr > cfg.flat_tol) {
    std::ostringstream msg;
    msg << "solve_flat: input connection is not flat, curvature magnitude " << fr;
    throw std::invalid_argument(msg.str());
  }

  double band_seen = 0.0;
  for (int attempt = 0; attempt < 2; ++attempt) {
    double radius = attempt == 0 ? A.dom.r : A.dom.r * 0.5;
    RealForm<cd> acur = restrict_to(A, radius);
    RealForm<cd> G = identity_plus(RealForm<cd>(acur.dom, 0, A.rows, A.cols, A.cap));

    // the iteration cannot descend below the curvature of the input
    double floor = std::max(cfg.abs_floor, 2.0 * fr);

    RealFlatResult res{};
    res.radius = radius;
    res.flat_res = fr;
    bool banded = false;
    double prev = std::numeric_limits<double>::infinity();
    int grow = 0;
    std::string status = "max iterations reached";

    for (int k = 0; k <= cfg.k_max; ++k) {
      double a = radius * real_sup(acur, cfg.samples);
      res.trace.push_back(a);
      if (a <= floor) {
        res.converged = true;
        status = "converged";
        break;
      }
      if (a > prev) {
        if (++grow >= 2) {
          status = "diverged: connection magnitude grew on two consecutive steps";
          break;
        }
      } else {
        grow = 0;
      }
      prev = a;
      if (k == cfg.k_max) break;

      RealForm<cd> eta = neg(poincare_operator(acur));
      double band = real_sup_operator_norm(eta, cfg.samples);
      if (band >= cfg.eps) {
        banded = true;
        band_seen = band;
        break;
      }
      RealForm<cd> g = identity_plus(eta);
      RealForm<cd> gi = gauge_inverse_of_identity_plus(eta);
      acur = wedge(gi, add(exterior_deriv(g), wedge(acur, g)));
      G = wedge(G, g);
      ++res.iterations;
    }

    if (banded && attempt == 0) continue; // shrink the radius once and retry
    if (banded) {
      std::ostringstream msg;
      msg << "solve_flat: gauge step of magnitude " << band_seen
          << " leaves the invertibility band even at half the radius";
      throw GaugeBoundViolation(msg.str());
    }

    res.status = status;
    res.gauge = G;
    res.gauge_inv = gauge_inverse_of_identity_plus(minus_identity(G));
    RealForm<cd> a0 = restrict_to(A, radius);
    res.residual =
        radius * real_sup(add(exterior_deriv(G), wedge(a0, G)), cfg.samples);
    return res;
  }
  throw std::logic_error("solve_flat: unreachable");
}

} // namespace dbf
