#ifndef DBARFORGE_RECALIBRATION_HPP
#define DBARFORGE_RECALIBRATION_HPP

// Length-m calibrations and the recalibration semigroup acting on them.
// A calibration stores connection forms omega^{s,k} of arity k+1 and shape
// (p_{s+k}, p_s) for s = 0..m, k = -1..m-s, minus (0,-1); the k = -1 slots
// are the constant-in-spirit chain maps between stages.  A parameter stores
// eta^{s,k} of arity k, same shape law, k = 0..m-s; its stage gauges are
// g_s = I + eta^{s,0}.  Everything here is generic over the representation:
// PolyForm<RatComplex> for exact algebra-law checks, PolyForm<cd> for
// manufactured problems, GridForm inside the solver.
//
// Index conventions never silently wrap: out-of-range components are formal
// zeros, and each sum below skips exactly those terms.

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dbarforge/forms.hpp"
#include "dbarforge/grid.hpp"
#include "dbarforge/holder.hpp"

namespace dbf {

using StageIndex = std::pair<int, int>; // (s, k)

// Invertibility margin for the stage gauges: every eta^{s,0} must satisfy
// sup |eta^{s,0}(z)| < kGaugeEps pointwise in operator norm.  The bound the
// estimates need is only < 1/2; 0.4 leaves headroom for |g^{+-1}| < 2.
inline constexpr double kGaugeEps = 0.4;

// Raised when a gauge leaves (or would leave) the invertible band.  The
// solver catches this to trigger a restart at smaller radius.
struct GaugeBoundViolation : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// representation shims

template <class S>
PolyForm<S> zero_like(const PolyForm<S>& proto, int q, int rows, int cols) {
  return zero_form<S>(proto.dom, q, rows, cols, proto.cap);
}
inline GridForm zero_like(const GridForm& proto, int q, int rows, int cols) {
  return grid_zero(proto.spec, q, rows, cols);
}

template <class S>
bool same_space(const PolyForm<S>& a, const PolyForm<S>& b) {
  return a.dom == b.dom;
}
inline bool same_space(const GridForm& a, const GridForm& b) {
  return a.spec == b.spec ||
         (a.spec->n == b.spec->n && a.spec->r == b.spec->r && a.spec->m == b.spec->m);
}

template <class Form>
Form identity_like(const Form& proto, int p) {
  return identity_plus(zero_like(proto, 0, p, p));
}

// ---------------------------------------------------------------------------
// domain types

template <class Form>
struct Calibration {
  int m = 0;
  std::vector<int> p; // stage ranks, size m+1
  std::map<StageIndex, Form> comp;

  bool in_range(int s, int k) const {
    return s >= 0 && s <= m && k >= -1 && k <= m - s && !(s == 0 && k == -1);
  }
  bool has(int s, int k) const { return comp.count({s, k}) != 0; }
  const Form& at(int s, int k) const {
    auto it = comp.find({s, k});
    if (it == comp.end()) throw std::logic_error("calibration: component not stored");
    return it->second;
  }
  void set(int s, int k, Form f) {
    if (!in_range(s, k)) throw std::logic_error("calibration: index out of range");
    comp.insert_or_assign(StageIndex{s, k}, std::move(f));
  }
};

template <class Form>
struct RecalParameter {
  int m = 0;
  std::vector<int> p;
  std::map<StageIndex, Form> comp;

  bool in_range(int s, int k) const {
    return s >= 0 && s <= m && k >= 0 && k <= m - s;
  }
  bool has(int s, int k) const { return comp.count({s, k}) != 0; }
  const Form& at(int s, int k) const {
    auto it = comp.find({s, k});
    if (it == comp.end()) throw std::logic_error("parameter: component not stored");
    return it->second;
  }
  void set(int s, int k, Form f) {
    if (!in_range(s, k)) throw std::logic_error("parameter: index out of range");
    comp.insert_or_assign(StageIndex{s, k}, std::move(f));
  }
};

// Structural check: every in-range component present, with the arity and
// shape the index law demands, all over one space.  Throws on violation.
template <class Form>
void validate(const Calibration<Form>& w) {
  if (w.m < 0) throw std::invalid_argument("calibration: negative length");
  if (int(w.p.size()) != w.m + 1)
    throw std::invalid_argument("calibration: rank vector needs m+1 entries");
  for (int v : w.p)
    if (v < 1) throw std::invalid_argument("calibration: ranks must be positive");
  const Form* proto = nullptr;
  for (int s = 0; s <= w.m; ++s)
    for (int k = -1; k <= w.m - s; ++k) {
      if (!w.in_range(s, k)) continue;
      const Form& f = w.at(s, k);
      if (f.q != k + 1 || f.rows != w.p[size_t(s + k)] || f.cols != w.p[size_t(s)])
        throw std::invalid_argument("calibration: component shape violates index law");
      if (proto && !same_space(*proto, f))
        throw std::invalid_argument("calibration: components live on different domains");
      if (!proto) proto = &f;
    }
  for (auto& [sk, f] : w.comp)
    if (!w.in_range(sk.first, sk.second))
      throw std::invalid_argument("calibration: stored component out of range");
}

template <class Form>
void validate(const RecalParameter<Form>& e) {
  if (e.m < 0) throw std::invalid_argument("parameter: negative length");
  if (int(e.p.size()) != e.m + 1)
    throw std::invalid_argument("parameter: rank vector needs m+1 entries");
  const Form* proto = nullptr;
  for (int s = 0; s <= e.m; ++s)
    for (int k = 0; k <= e.m - s; ++k) {
      const Form& f = e.at(s, k);
      if (f.q != k || f.rows != e.p[size_t(s + k)] || f.cols != e.p[size_t(s)])
        throw std::invalid_argument("parameter: component shape violates index law");
      if (proto && !same_space(*proto, f))
        throw std::invalid_argument("parameter: components live on different domains");
      if (!proto) proto = &f;
    }
  for (auto& [sk, f] : e.comp)
    if (!e.in_range(sk.first, sk.second))
      throw std::invalid_argument("parameter: stored component out of range");
}

template <class Form>
void check_same_family(const RecalParameter<Form>& a, const RecalParameter<Form>& b) {
  if (a.m != b.m || a.p != b.p)
    throw std::invalid_argument("parameters disagree on length or ranks");
}

template <class Form>
void check_same_family(const RecalParameter<Form>& e, const Calibration<Form>& w) {
  if (e.m != w.m || e.p != w.p)
    throw std::invalid_argument("parameter and calibration disagree on length or ranks");
}

// ---------------------------------------------------------------------------
// semigroup structure

// Product eta1 ^ eta2, componentwise
//   (e1 ^ e2)^{s,k} = e1^{s,k} + e2^{s,k} + sum_{j=0}^k e1^{s+j,k-j} ^ e2^{s,j}.
// Every index on the right is automatically in range.  The action convention
// is recalibrate(compose(e1,e2), w) = recalibrate(e2, recalibrate(e1, w)).
template <class Form>
RecalParameter<Form> compose_parameters(const RecalParameter<Form>& e1,
                                        const RecalParameter<Form>& e2) {
  check_same_family(e1, e2);
  RecalParameter<Form> r;
  r.m = e1.m;
  r.p = e1.p;
  for (int s = 0; s <= r.m; ++s)
    for (int k = 0; s + k <= r.m; ++k) {
      Form acc = add(e1.at(s, k), e2.at(s, k));
      for (int j = 0; j <= k; ++j)
        acc = add(acc, wedge(e1.at(s + j, k - j), e2.at(s, j)));
      r.comp.emplace(StageIndex{s, k}, std::move(acc));
    }
  return r;
}

// Two-sided inverse under compose_parameters, by increasing-k triangular
// back-substitution: the k = 0 layer inverts the gauges, and each higher
// layer solves the composition law with the already known lower layers.
template <class Form>
RecalParameter<Form> invert_parameter(const RecalParameter<Form>& e) {
  RecalParameter<Form> r;
  r.m = e.m;
  r.p = e.p;
  std::vector<Form> ginv;
  ginv.reserve(size_t(e.m) + 1);
  for (int s = 0; s <= e.m; ++s)
    ginv.push_back(gauge_inverse_of_identity_plus(e.at(s, 0)));
  for (int k = 0; k <= e.m; ++k)
    for (int s = 0; s + k <= e.m; ++s) {
      if (k == 0) {
        Form id = identity_like(e.at(s, 0), e.p[size_t(s)]);
        r.comp.emplace(StageIndex{s, 0}, sub(ginv[size_t(s)], id));
        continue;
      }
      Form acc = e.at(s, k);
      for (int j = 0; j < k; ++j)
        acc = add(acc, wedge(e.at(s + j, k - j), r.at(s, j)));
      r.comp.emplace(StageIndex{s, k}, neg(wedge(ginv[size_t(s + k)], acc)));
    }
  return r;
}

// ---------------------------------------------------------------------------
// the action on calibrations

// omega_eta, by increasing-k recursion:
//   omega^{s,-1}_eta = g_{s-1}^{-1} omega^{s,-1} g_s
//   omega^{s,k}_eta  = (I + eta^{s+k,0})^{-1} ( dbar eta^{s,k}
//                      + sum_{j=0}^{k+1} omega^{s+j,k-j} ^ eta^{s,j}
//                      - sum_{j=-1}^{k-1} (-1)^{k-j} eta^{s+j,k-j} ^ omega^{s,j}_eta
//                      + omega^{s,k} )
// with out-of-range terms dropped.  The second sum only consumes components
// produced at strictly smaller k, which the loop order guarantees.
template <class Form>
Calibration<Form> recalibrate(const RecalParameter<Form>& e, const Calibration<Form>& w) {
  check_same_family(e, w);
  const int m = w.m;
  Calibration<Form> r;
  r.m = m;
  r.p = w.p;
  std::vector<Form> g, ginv;
  g.reserve(size_t(m) + 1);
  ginv.reserve(size_t(m) + 1);
  for (int s = 0; s <= m; ++s) {
    g.push_back(identity_plus(e.at(s, 0)));
    ginv.push_back(gauge_inverse_of_identity_plus(e.at(s, 0)));
  }
  for (int s = 1; s <= m; ++s)
    r.comp.emplace(StageIndex{s, -1},
                   wedge(ginv[size_t(s - 1)], wedge(w.at(s, -1), g[size_t(s)])));
  for (int k = 0; k <= m; ++k)
    for (int s = 0; s + k <= m; ++s) {
      Form acc = add(dbar(e.at(s, k)), w.at(s, k));
      for (int j = 0; j <= k + 1; ++j) {
        if (!w.in_range(s + j, k - j) || !e.in_range(s, j)) continue;
        acc = add(acc, wedge(w.at(s + j, k - j), e.at(s, j)));
      }
      for (int j = -1; j <= k - 1; ++j) {
        if (!e.in_range(s + j, k - j) || !r.in_range(s, j)) continue;
        Form t = wedge(e.at(s + j, k - j), r.at(s, j));
        // term enters as -(-1)^{k-j}: minus for even k-j, plus for odd
        acc = ((k - j) % 2 == 0) ? sub(acc, t) : add(acc, t);
      }
      r.comp.emplace(StageIndex{s, k}, wedge(ginv[size_t(s + k)], acc));
    }
  return r;
}

// ---------------------------------------------------------------------------
// defect forms (exact objects; the *_residual wrappers below take norms)

// Structure-equation defects
//   dbar omega^{s,k} + sum_{j=-1}^{k+1} (-1)^{k-j} omega^{s+j,k-j} ^ omega^{s,j},
// one per calibration slot.  At k = -1 this is the commutation identity
// dbar phi_s + omega^{s-1,0} phi_s - phi_s omega^{s,0}.
template <class Form>
std::map<StageIndex, Form> integrability_defect(const Calibration<Form>& w) {
  std::map<StageIndex, Form> out;
  for (int s = 0; s <= w.m; ++s)
    for (int k = -1; k <= w.m - s; ++k) {
      if (!w.in_range(s, k)) continue;
      Form acc = dbar(w.at(s, k));
      for (int j = -1; j <= k + 1; ++j) {
        if (!w.in_range(s + j, k - j) || !w.in_range(s, j)) continue;
        Form t = wedge(w.at(s + j, k - j), w.at(s, j));
        acc = ((k - j) % 2 == 0) ? add(acc, t) : sub(acc, t);
      }
      out.emplace(StageIndex{s, k}, std::move(acc));
    }
  return out;
}

// Chain-map composition defects phi_{s-1} phi_s for s = 2..m.
template <class Form>
std::map<int, Form> chain_defect(const Calibration<Form>& w) {
  std::map<int, Form> out;
  for (int s = 2; s <= w.m; ++s)
    out.emplace(s, wedge(w.at(s - 1, -1), w.at(s, -1)));
  return out;
}

// Left-hand sides of the quasi-linear system solved by the scheme:
//   dbar eta^{s,k} + sum_{j=0}^{k+1} omega^{s+j,k-j} ^ eta^{s,j}
//   + (-1)^k eta^{s-1,k+1} ^ omega^{s,-1}_eta + omega^{s,k},
// one per parameter slot.  All defects vanish exactly when the recalibrated
// omega^{s,k}_eta vanish for every k >= 0.
template <class Form>
std::map<StageIndex, Form> system_defect(const RecalParameter<Form>& e,
                                         const Calibration<Form>& w) {
  check_same_family(e, w);
  std::map<StageIndex, Form> out;
  std::vector<Form> g, ginv;
  for (int s = 0; s <= w.m; ++s) {
    g.push_back(identity_plus(e.at(s, 0)));
    ginv.push_back(gauge_inverse_of_identity_plus(e.at(s, 0)));
  }
  for (int s = 0; s <= w.m; ++s)
    for (int k = 0; s + k <= w.m; ++k) {
      Form acc = add(dbar(e.at(s, k)), w.at(s, k));
      for (int j = 0; j <= k + 1; ++j) {
        if (!w.in_range(s + j, k - j) || !e.in_range(s, j)) continue;
        acc = add(acc, wedge(w.at(s + j, k - j), e.at(s, j)));
      }
      if (s >= 1 && e.in_range(s - 1, k + 1) && w.in_range(s, -1)) {
        Form phi_eta =
            wedge(ginv[size_t(s - 1)], wedge(w.at(s, -1), g[size_t(s)]));
        Form t = wedge(e.at(s - 1, k + 1), phi_eta);
        acc = (k % 2 == 0) ? add(acc, t) : sub(acc, t);
      }
      out.emplace(StageIndex{s, k}, std::move(acc));
    }
  return out;
}

// Gauged-resolution defects: slot 0 holds omega^{0,0}_eta and slot s >= 1
// holds dbar(g_{s-1}^{-1} phi_s g_s), whose vanishing says the gauged chain
// maps are holomorphic.
template <class Form>
std::vector<Form> sigma_defect(const RecalParameter<Form>& e, const Calibration<Form>& w) {
  check_same_family(e, w);
  Calibration<Form> weta = recalibrate(e, w);
  std::vector<Form> out;
  out.push_back(weta.at(0, 0));
  for (int s = 1; s <= w.m; ++s) out.push_back(dbar(weta.at(s, -1)));
  return out;
}

// ---------------------------------------------------------------------------
// numeric residuals (double and grid representations only)

inline double form_norm0(const PolyForm<cd>& f, const HolderParams& hp = {}) {
  return holder_norm(f, 0, hp.mu, std::vector<double>{1.0}, hp);
}
inline double form_norm0(const GridForm& f, const HolderParams& hp = {}) {
  return grid_holder_norm(f, f.spec->r, 0, hp.mu, std::vector<double>{1.0}, hp);
}

template <class Form>
std::map<StageIndex, double> integrability_residual(const Calibration<Form>& w,
                                                    const HolderParams& hp = {}) {
  std::map<StageIndex, double> out;
  for (auto& [sk, f] : integrability_defect(w)) out.emplace(sk, form_norm0(f, hp));
  return out;
}

template <class Form>
std::map<StageIndex, double> system_residual(const RecalParameter<Form>& e,
                                             const Calibration<Form>& w,
                                             const HolderParams& hp = {}) {
  std::map<StageIndex, double> out;
  for (auto& [sk, f] : system_defect(e, w)) out.emplace(sk, form_norm0(f, hp));
  return out;
}

template <class Form>
std::vector<double> sigma_residual(const RecalParameter<Form>& e, const Calibration<Form>& w,
                                   const HolderParams& hp = {}) {
  std::vector<double> out;
  for (auto& f : sigma_defect(e, w)) out.push_back(form_norm0(f, hp));
  return out;
}

// ---------------------------------------------------------------------------
// gauge bound checks

// Sup over stored in-ball nodes of the induced infinity norm of the value.
inline double sup_operator_norm(const GridForm& f) {
  if (f.q != 0) throw std::logic_error("operator norm needs a 0-form");
  double best = 0.0;
  auto it = f.comp.find(0u);
  if (it == f.comp.end()) return 0.0;
  const auto& v = it->second;
  size_t cnt = f.spec->count();
  std::array<double, 2 * kMaxVars> x{};
  for (size_t pt = 0; pt < cnt; ++pt) {
    f.spec->point(pt, x);
    if (!f.spec->in_ball(x)) continue;
    const cd* blk = v.data() + pt * size_t(f.pe());
    for (int i = 0; i < f.rows; ++i) {
      double row = 0.0;
      for (int j = 0; j < f.cols; ++j) row += std::abs(blk[i * f.cols + j]);
      best = std::max(best, row);
    }
  }
  return best;
}

// Same bound for a polynomial 0-form, over a deterministic point sample.
inline double sup_operator_norm(const PolyForm<cd>& f, int samples = 256) {
  if (f.q != 0) throw std::logic_error("operator norm needs a 0-form");
  double best = 0.0;
  std::array<cd, kMaxVars> z{};
  std::vector<cd> val(size_t(f.rows) * size_t(f.cols));
  std::uint64_t state = 0x9e3779b97f4a7c15ull;
  auto next = [&state]() {
    state += 0x9e3779b97f4a7c15ull;
    std::uint64_t x = state;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return double((x ^ (x >> 31)) >> 11) * 0x1.0p-53;
  };
  int accepted = 0;
  while (accepted < samples) {
    double rr = 0.0;
    for (int i = 0; i < f.dom.n; ++i) {
      double a = (2.0 * next() - 1.0) * f.dom.r;
      double b = (2.0 * next() - 1.0) * f.dom.r;
      z[size_t(i)] = cd(a, b);
      rr += a * a + b * b;
    }
    if (rr > f.dom.r * f.dom.r) continue;
    ++accepted;
    eval_component(f, 0u, z, val.data());
    for (int i = 0; i < f.rows; ++i) {
      double row = 0.0;
      for (int j = 0; j < f.cols; ++j) row += std::abs(val[size_t(i * f.cols + j)]);
      best = std::max(best, row);
    }
  }
  return best;
}

// Enforce the invertibility band on every stage gauge.
template <class Form>
void check_gauge_bound(const RecalParameter<Form>& e, double eps = kGaugeEps) {
  for (int s = 0; s <= e.m; ++s) {
    double v = sup_operator_norm(e.at(s, 0));
    if (!(v < eps))
      throw GaugeBoundViolation("stage gauge leaves the invertible band: |eta^{" +
                                std::to_string(s) + ",0}| = " + std::to_string(v));
  }
}

// ---------------------------------------------------------------------------
// manufactured problems

template <class S>
RecalParameter<PolyForm<S>> zero_parameter(const BallDomain& dom, int cap,
                                           const std::vector<int>& p) {
  RecalParameter<PolyForm<S>> e;
  e.m = int(p.size()) - 1;
  e.p = p;
  for (int s = 0; s <= e.m; ++s)
    for (int k = 0; s + k <= e.m; ++k)
      e.comp.emplace(StageIndex{s, k},
                     zero_form<S>(dom, k, p[size_t(s + k)], p[size_t(s)], cap));
  return e;
}

// Trivial calibration: all omega^{s,k} = 0 for k >= 0 and constant chain maps
// phi_s built as coordinate selectors with phi_{s-1} phi_s = 0.  Stage s maps
// its first rho_s basis vectors onto a target window that starts past the
// window stage s-1 consumed, so consecutive products vanish column by column.
template <class S>
Calibration<PolyForm<S>> trivial_calibration(const BallDomain& dom, int cap,
                                             const std::vector<int>& p) {
  Calibration<PolyForm<S>> w;
  w.m = int(p.size()) - 1;
  w.p = p;
  for (int s = 0; s <= w.m; ++s)
    for (int k = 0; s + k <= w.m; ++k)
      w.comp.emplace(StageIndex{s, k},
                     zero_form<S>(dom, k + 1, p[size_t(s + k)], p[size_t(s)], cap));
  int prev_used = 0;
  for (int s = 1; s <= w.m; ++s) {
    int room = p[size_t(s - 1)] - prev_used;
    int rho = std::min(p[size_t(s)], room);
    if (s < w.m) rho = std::min(rho, p[size_t(s)] - 1);
    if (rho < 0) rho = 0;
    PolyForm<S> phi = zero_form<S>(dom, 0, p[size_t(s - 1)], p[size_t(s)], cap);
    PolyMat<S> mat(p[size_t(s - 1)], p[size_t(s)], dom.n, cap);
    for (int j = 0; j < rho; ++j)
      mat.at(prev_used + j, j).add_term(Mono{}, ScalarTraits<S>::one());
    phi.set(0u, std::move(mat));
    w.comp.emplace(StageIndex{s, -1}, std::move(phi));
    prev_used = rho;
  }
  return w;
}

// Sample polynomial data onto a grid, component by component.
inline Calibration<GridForm> to_grid(const Calibration<PolyForm<cd>>& w, GridSpecPtr sp) {
  Calibration<GridForm> r;
  r.m = w.m;
  r.p = w.p;
  for (auto& [sk, f] : w.comp) r.comp.emplace(sk, to_grid(f, sp));
  return r;
}
inline RecalParameter<GridForm> to_grid(const RecalParameter<PolyForm<cd>>& e, GridSpecPtr sp) {
  RecalParameter<GridForm> r;
  r.m = e.m;
  r.p = e.p;
  for (auto& [sk, f] : e.comp) r.comp.emplace(sk, to_grid(f, sp));
  return r;
}

struct ResolutionProblem {
  Calibration<PolyForm<cd>> omega;
  // inverse of the parameter the instance was built with; recalibrating by it
  // returns omega to the trivial calibration, so it solves the system
  std::optional<RecalParameter<PolyForm<cd>>> reference;
  std::uint64_t seed = 0;
  double difficulty = 0.0;
};

// Deterministic uniform in [0,1) from raw engine output; distribution
// classes are implementation defined, this is not.
inline double unit_real(std::mt19937_64& g) { return double(g() >> 11) * 0x1.0p-53; }

// Build an instance with a known solution: draw a random parameter eta at
// the requested difficulty, push the trivial calibration through it, and
// hand back the inverse parameter as the certified reference.  Rescales
// toward zero if the draw leaves the gauge band, and gives up only if even
// heavy shrinking cannot re-enter it.
inline ResolutionProblem manufacture_problem(std::uint64_t seed, int m, int n,
                                             const std::vector<int>& p, double difficulty,
                                             int cap = 24) {
  if (m < 0 || m > 3) throw std::invalid_argument("manufacture: length must be 0..3");
  if (n < 1 || n > kMaxVars) throw std::invalid_argument("manufacture: bad dimension");
  if (int(p.size()) != m + 1)
    throw std::invalid_argument("manufacture: rank vector needs m+1 entries");
  if (difficulty < 0.0) throw std::invalid_argument("manufacture: negative difficulty");
  BallDomain dom{n, 1.0};
  std::mt19937_64 rng(seed);
  auto coeff = [&](double scale) {
    return cd(scale * (2.0 * unit_real(rng) - 1.0), scale * (2.0 * unit_real(rng) - 1.0));
  };
  RecalParameter<PolyForm<cd>> eta = zero_parameter<cd>(dom, cap, p);
  for (int s = 0; s <= m; ++s)
    for (int k = 0; s + k <= m; ++k) {
      PolyForm<cd> f(dom, k, p[size_t(s + k)], p[size_t(s)], cap);
      for (unsigned key : component_keys(n, k)) {
        PolyMat<cd> mat(p[size_t(s + k)], p[size_t(s)], n, cap);
        for (auto& poly : mat.e) {
          poly.add_term(Mono{}, coeff(0.5 * difficulty));
          for (int i = 0; i < n; ++i) {
            Mono zi{}, zbi{};
            zi.a[size_t(i)] = 1;
            zbi.b[size_t(i)] = 1;
            poly.add_term(zi, coeff(0.2 * difficulty));
            poly.add_term(zbi, coeff(0.2 * difficulty));
          }
          Mono quad{};
          quad.a[0] = 1;
          quad.b[0] = 1;
          poly.add_term(quad, coeff(0.1 * difficulty));
        }
        f.set(key, std::move(mat));
      }
      eta.set(s, k, std::move(f));
    }
  for (int tries = 0; tries < 40; ++tries) {
    bool ok = true;
    for (int s = 0; s <= m && ok; ++s)
      ok = sup_operator_norm(eta.at(s, 0)) < kGaugeEps;
    if (ok) break;
    if (tries == 39)
      throw GaugeBoundViolation("manufacture: difficulty too large for the gauge band");
    for (auto& [sk, f] : eta.comp) f = scale(f, cd(0.9, 0.0));
  }
  ResolutionProblem out;
  out.omega = recalibrate(eta, trivial_calibration<cd>(dom, cap, p));
  out.reference = invert_parameter(eta);
  out.seed = seed;
  out.difficulty = difficulty;
  return out;
}

} // namespace dbf

#endif
