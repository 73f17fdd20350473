#include "dbarforge/holder.hpp"

#include <cmath>
#include <map>
#include <mutex>

#include "dbarforge/ball.hpp"

namespace dbf {

namespace {

double halton(uint64_t i, int base) {
  double f = 1.0, r = 0.0;
  while (i > 0) {
    f /= base;
    r += f * double(i % uint64_t(base));
    i /= uint64_t(base);
  }
  return r;
}

SamplePattern make_pattern(int n, int count, int pair_budget) {
  static const int bases[8] = {2, 3, 5, 7, 11, 13, 17, 19};
  SamplePattern pat;
  pat.n = n;
  int d = 2 * n;
  uint64_t idx = 1;
  while (int(pat.pts.size()) < count) {
    std::array<double, 2 * kMaxVars> x{};
    double norm2 = 0.0;
    for (int j = 0; j < d; ++j) {
      double v = 2.0 * halton(idx, bases[j]) - 1.0;
      x[size_t(j)] = v;
      norm2 += v * v;
    }
    ++idx;
    if (norm2 <= 1.0) pat.pts.push_back(x);
  }
  // Deterministic pair subset (the full pair set is quadratic).
  uint64_t s = 0x2545f4914f6cdd1dull;
  auto next = [&s]() {
    s ^= s << 13;
    s ^= s >> 7;
    s ^= s << 17;
    return s;
  };
  int want = std::min<long long>(pair_budget, 1LL * count * (count - 1) / 2);
  pat.pairs.reserve(size_t(want));
  while (int(pat.pairs.size()) < want) {
    int i = int(next() % uint64_t(count));
    int j = int(next() % uint64_t(count));
    if (i != j) pat.pairs.emplace_back(i, j);
  }
  return pat;
}

} // namespace

const SamplePattern& unit_ball_pattern(int n, int count, int pair_budget) {
  static std::map<std::tuple<int, int, int>, SamplePattern> cache;
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  auto key = std::make_tuple(n, count, pair_budget);
  auto it = cache.find(key);
  if (it == cache.end()) it = cache.emplace(key, make_pattern(n, count, pair_budget)).first;
  return it->second;
}

double op_norm(const cd* a, int rows, int cols) {
  if (rows == 1 && cols == 1) return std::abs(a[0]);
  // power iteration on A^H A
  std::vector<cd> v(static_cast<size_t>(cols));
  for (int j = 0; j < cols; ++j) v[size_t(j)] = cd(1.0 + 0.01 * j, 0.0);
  std::vector<cd> av(static_cast<size_t>(rows)), atav(static_cast<size_t>(cols));
  double lam = 0.0;
  for (int it = 0; it < 80; ++it) {
    for (int i = 0; i < rows; ++i) {
      cd acc = 0.0;
      for (int j = 0; j < cols; ++j) acc += a[size_t(i) * cols + j] * v[size_t(j)];
      av[size_t(i)] = acc;
    }
    for (int j = 0; j < cols; ++j) {
      cd acc = 0.0;
      for (int i = 0; i < rows; ++i) acc += std::conj(a[size_t(i) * cols + j]) * av[size_t(i)];
      atav[size_t(j)] = acc;
    }
    double nrm = 0.0;
    for (int j = 0; j < cols; ++j) nrm += std::norm(atav[size_t(j)]);
    nrm = std::sqrt(nrm);
    if (nrm == 0.0) return 0.0;
    double prev = lam;
    lam = nrm;
    for (int j = 0; j < cols; ++j) v[size_t(j)] = atav[size_t(j)] / nrm;
    if (it > 4 && std::fabs(lam - prev) <= 1e-13 * lam) break;
  }
  return std::sqrt(lam);
}

double holder_seminorm_values(const std::vector<cd>& values, int rows, int cols,
                              const SamplePattern& pat, double r, double mu) {
  int pe = rows * cols;
  double sup = 0.0;
  for (size_t p = 0; p < pat.pts.size(); ++p)
    sup = std::max(sup, op_norm(values.data() + p * size_t(pe), rows, cols));

  double quot = 0.0;
  std::vector<cd> diff(static_cast<size_t>(pe));
  int d = 2 * pat.n;
  for (auto& [i, j] : pat.pairs) {
    double dist2 = 0.0;
    for (int t = 0; t < d; ++t) {
      double dx = (pat.pts[size_t(i)][size_t(t)] - pat.pts[size_t(j)][size_t(t)]) * r;
      dist2 += dx * dx;
    }
    if (dist2 <= 0.0) continue;
    for (int t = 0; t < pe; ++t)
      diff[size_t(t)] = values[size_t(i) * size_t(pe) + size_t(t)] -
                        values[size_t(j) * size_t(pe) + size_t(t)];
    double nd = op_norm(diff.data(), rows, cols);
    if (nd == 0.0) continue;
    quot = std::max(quot, nd / std::pow(std::sqrt(dist2), mu));
  }
  return sup + std::pow(r, mu) * quot;
}

namespace {

// Evaluate a component matrix of a PolyRep form on the scaled pattern.
std::vector<cd> poly_component_values(const PolyMat<cd>& m, int n, double r,
                                      const SamplePattern& pat) {
  std::vector<cd> vals(pat.pts.size() * m.e.size());
  for (size_t p = 0; p < pat.pts.size(); ++p) {
    std::array<cd, kMaxVars> z{};
    for (int j = 0; j < n; ++j)
      z[size_t(j)] = cd(pat.pts[p][size_t(2 * j)] * r, pat.pts[p][size_t(2 * j + 1)] * r);
    for (size_t t = 0; t < m.e.size(); ++t) vals[p * m.e.size() + t] = m.e[t].eval(z);
  }
  return vals;
}

PolyMat<cd> apply_multi_deriv(const PolyMat<cd>& m, const std::vector<int>& alpha) {
  PolyMat<cd> r = m;
  int n = alpha.size() / 2;
  for (int j = 0; j < n; ++j) {
    for (int t = 0; t < alpha[size_t(2 * j)]; ++t)
      for (auto& p : r.e) p = p.dx(j);
    for (int t = 0; t < alpha[size_t(2 * j + 1)]; ++t)
      for (auto& p : r.e) p = p.dy(j);
  }
  return r;
}

} // namespace

double holder_seminorm(const PolyForm<cd>& u, unsigned key, double mu,
                       const HolderParams& hp) {
  const SamplePattern& pat =
      unit_ball_pattern(u.dom.n, hp.sample_count(u.dom.n), hp.pair_budget);
  auto it = u.comp.find(key);
  if (it == u.comp.end()) return 0.0;
  auto vals = poly_component_values(it->second, u.dom.n, u.dom.r, pat);
  return holder_seminorm_values(vals, u.rows, u.cols, pat, u.dom.r, mu);
}

double holder_norm(const PolyForm<cd>& u, int h, double mu,
                   const std::vector<double>& S, const HolderParams& hp) {
  const SamplePattern& pat =
      unit_ball_pattern(u.dom.n, hp.sample_count(u.dom.n), hp.pair_budget);
  double rq = std::pow(u.dom.r, u.q);
  double total = 0.0;
  for (auto& [key, m] : u.comp) {
    for (int k = 0; k <= h; ++k) {
      double Sk = size_t(k) < S.size() ? S[size_t(k)] : S.back();
      if (Sk == 0.0) continue;
      std::vector<std::vector<int>> alphas;
      enumerate_multi_indices(2 * u.dom.n, k, alphas);
      for (auto& alpha : alphas) {
        auto dm = apply_multi_deriv(m, alpha);
        if (dm.is_zero()) continue;
        auto vals = poly_component_values(dm, u.dom.n, u.dom.r, pat);
        double semi = holder_seminorm_values(vals, u.rows, u.cols, pat, u.dom.r, mu);
        total += Sk * std::pow(u.dom.r, k) * rq * semi;
      }
    }
  }
  return total;
}

double max_deriv_sup(const PolyForm<cd>& u, int k, const HolderParams& hp) {
  const SamplePattern& pat =
      unit_ball_pattern(u.dom.n, hp.sample_count(u.dom.n), hp.pair_budget);
  double best = 0.0;
  std::vector<std::vector<int>> alphas;
  enumerate_multi_indices(2 * u.dom.n, k, alphas);
  for (auto& [key, m] : u.comp)
    for (auto& alpha : alphas) {
      auto dm = apply_multi_deriv(m, alpha);
      if (dm.is_zero()) continue;
      auto vals = poly_component_values(dm, u.dom.n, u.dom.r, pat);
      double semi = holder_seminorm_values(vals, u.rows, u.cols, pat, u.dom.r, hp.mu);
      best = std::max(best, semi);
    }
  return best;
}

// ------------------------------------------------------------------ weights

double kernel_derivative_bound(int n, int k) {
  // Each z-derivative of the kernel raises the singularity order by one and
  // multiplies the coefficient by at most (2n - 1 + order).
  double c = 1.0;
  for (int j = 1; j <= k; ++j) c *= double(2 * n - 1 + j);
  return c;
}

double weight_submult_constant(int two_n, int k) {
  std::vector<std::vector<int>> gammas;
  enumerate_multi_indices(two_n, k, gammas);
  double best = 0.0;
  for (auto& g : gammas) {
    double v = 1.0;
    for (int gi : g) v *= binomial(gi, gi / 2);
    best = std::max(best, v);
  }
  return best > 0.0 ? 1.0 / best : 1.0;
}

std::vector<double> weight_base_magnitudes(int n, int K,
                                           const std::vector<double>& phi_deriv_sup) {
  const auto& bt = bump_derivative_table();
  std::vector<double> A(size_t(K) + 1, 0.0);
  for (int k = 1; k <= K; ++k) {
    // Hoelder-norm proxy for the k-th cutoff derivative: sup plus the
    // interpolation bound sqrt(sup * sup') for mu = 1/2.
    double s0 = k < int(bt.size()) ? bt[size_t(k)] : bt.back();
    double s1 = (k + 1) < int(bt.size()) ? bt[size_t(k + 1)] : bt.back();
    double rho_mag = s0 + std::sqrt(s0 * s1);
    double phi_mag = size_t(k) < phi_deriv_sup.size() ? phi_deriv_sup[size_t(k)] : 0.0;
    double per_alpha = std::max(rho_mag, phi_mag);
    A[size_t(k)] = binomial(k + 2 * n - 1, 2 * n - 1) * per_alpha;
  }
  return A;
}

WeightSequence build_weights(int n, int K, const std::vector<double>& A,
                             const std::vector<double>& r_caps,
                             const std::vector<double>& l_caps) {
  const double inf = std::numeric_limits<double>::infinity();
  auto cap_at = [](const std::vector<double>& caps, int k) {
    return size_t(k) < caps.size() ? caps[size_t(k)] : std::numeric_limits<double>::infinity();
  };

  WeightSequence w;
  w.S.assign(size_t(K) + 1, 1.0);
  w.clause.assign(size_t(K) + 1, WeightSequence::kSeed);
  w.A.assign(size_t(K) + 1, 0.0);
  w.B.assign(size_t(K) + 1, 1.0);
  w.D.assign(size_t(K) + 1, 1.0);

  for (int k = 1; k <= K; ++k) {
    double Ak = size_t(k) < A.size() ? A[size_t(k)] : 0.0;
    w.A[size_t(k)] = Ak;
    double m = std::max(Ak, kernel_derivative_bound(n, k));
    w.B[size_t(k)] = (m != 0.0) ? 1.0 / m : 1.0; // "otherwise 1" convention
    w.D[size_t(k)] = weight_submult_constant(2 * n, k);
  }

  for (int k = 1; k <= K; ++k) {
    if (k == 1) {
      double v = w.B[1];
      int cl = WeightSequence::kBase;
      if (cap_at(r_caps, 1) < v) { v = cap_at(r_caps, 1); cl = WeightSequence::kRCap; }
      if (cap_at(l_caps, 1) < v) { v = cap_at(l_caps, 1); cl = WeightSequence::kLCap; }
      w.S[1] = v;
      w.clause[1] = cl;
      continue;
    }
    double base = std::ldexp(w.B[size_t(k)], -k); // 2^-k B_k
    double rc = cap_at(r_caps, k);
    double lc = cap_at(l_caps, k);
    double sub = inf;
    for (int j = 1; j <= k - 1; ++j) sub = std::min(sub, w.S[size_t(j)] * w.S[size_t(k - j)]);
    sub *= w.D[size_t(k)];
    double v = base;
    int cl = WeightSequence::kBase;
    if (rc < v) { v = rc; cl = WeightSequence::kRCap; }
    if (lc < v) { v = lc; cl = WeightSequence::kLCap; }
    if (sub < v) { v = sub; cl = WeightSequence::kSubmult; }
    w.S[size_t(k)] = v;
    w.clause[size_t(k)] = cl;
  }

  // Summability of sum over alpha of S_|alpha| C(n,|alpha|) 2^{|alpha|+2n-1}.
  double partial = 0.0;
  double prev_term = 0.0;
  int decay_run = 0;
  for (int k = 0; k <= K; ++k) {
    double count = binomial(k + 2 * n - 1, 2 * n - 1);
    double term = count * w.S[size_t(k)] * kernel_derivative_bound(n, k) *
                  std::ldexp(1.0, k + 2 * n - 1);
    partial += term;
    if (k > 0 && term < prev_term) ++decay_run;
    else if (k > 0) decay_run = 0;
    prev_term = term;
  }
  w.summability_partial = partial;
  w.summable = std::isfinite(partial) && decay_run >= 5;
  return w;
}

} // namespace dbf
