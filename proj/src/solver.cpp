// Rapid-convergence driver: the per-step homotopy ladder, the weight-cap
// bookkeeping, the initial-radius search, and the outer iteration with
// certification of the composed parameter.

#include "dbarforge/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>
#include <tuple>

namespace dbf {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

int s_law(int n, int h) { return 2 * n + h + 2; }

// exponent of the sigma loss in the one-step quadratic bound
int nu_law(int m, int h, int n) { return ((m + 2) * m + 1) * s_law(n, h); }

// exponent of the series gate, affine and increasing in j
int gamma_law(int m, int j, int n) { return (m + 1) * s_law(n, j); }

// sigma^{-e} * x through logs; +inf instead of overflow
double pow_loss(double sigma, int e, double x) {
  if (x <= 0.0) return 0.0;
  double lv = -double(e) * std::log(sigma) + std::log(x);
  if (lv > 700.0) return kInf;
  return std::exp(lv);
}

// Rebase a form onto an equal grid built by a different call site.  The node
// lattices coincide up to roundoff in the radius, so only the spec pointer
// moves; this keeps later exact-grid comparisons meaningful.
GridForm snap_to(GridForm f, GridSpecPtr sp) {
  if (f.spec->n != sp->n || f.spec->m != sp->m ||
      std::abs(f.spec->r - sp->r) > 1e-10 * sp->r)
    throw std::logic_error("snap: grids differ beyond roundoff");
  f.spec = sp;
  return f;
}

RecalParameter<GridForm> zero_param_grid(GridSpecPtr sp, const std::vector<int>& p) {
  RecalParameter<GridForm> e;
  e.m = int(p.size()) - 1;
  e.p = p;
  for (int s = 0; s <= e.m; ++s)
    for (int k = 0; s + k <= e.m; ++k)
      e.comp.emplace(StageIndex{s, k},
                     grid_zero(sp, k, p[size_t(s + k)], p[size_t(s)]));
  return e;
}

Calibration<GridForm> resample_cal(const Calibration<GridForm>& w, GridSpecPtr sp) {
  Calibration<GridForm> o;
  o.m = w.m;
  o.p = w.p;
  for (auto& [sk, f] : w.comp) o.comp.emplace(sk, f.spec == sp ? f : resample(f, sp));
  return o;
}

RecalParameter<GridForm> resample_par(const RecalParameter<GridForm>& e, GridSpecPtr sp) {
  RecalParameter<GridForm> o;
  o.m = e.m;
  o.p = e.p;
  for (auto& [sk, f] : e.comp) o.comp.emplace(sk, f.spec == sp ? f : resample(f, sp));
  return o;
}

std::vector<double> weight_prefix(const WeightSequence& seq, int h) {
  std::vector<double> S(static_cast<size_t>(h + 1));
  for (int j = 0; j <= h; ++j) S[size_t(j)] = seq.at(j);
  return S;
}

// Max over the t >= 0 rows of the weighted norm at order h; chain rows are
// tracked separately since they obey the 4c bound, not the decay.
double stage_norm_max(const Calibration<GridForm>& w, double r, int h,
                      const std::vector<double>& S, const HolderParams& hp,
                      std::map<StageIndex, double>* per, double* chain) {
  double a = 0.0, c = 0.0;
  for (auto& [sk, f] : w.comp) {
    double v = grid_holder_norm(f, r, h, hp.mu, S, hp);
    if (per) (*per)[sk] = v;
    if (sk.second >= 0)
      a = std::max(a, v);
    else
      c = std::max(c, v);
  }
  if (chain) *chain = c;
  return a;
}

// Scale-invariant magnitude of one stored component and of its derivatives of
// the given total order, summed over the order (the caps compare the two).
double comp_mu_norm(const GridForm& f, unsigned key, const HolderParams& hp) {
  return grid_holder_seminorm(f, key, f.spec->r, hp.mu, hp);
}

double deriv_mu_norm_sum(const GridForm& f, unsigned key, int order,
                         const HolderParams& hp) {
  std::vector<std::vector<int>> alphas;
  enumerate_multi_indices(f.spec->d(), order, alphas);
  double total = 0.0;
  for (auto& alpha : alphas) {
    GridForm d = f;
    for (int axis = 0; axis < f.spec->d(); ++axis)
      for (int t = 0; t < alpha[size_t(axis)]; ++t) d = deriv_axis(d, axis);
    total += grid_holder_seminorm(d, key, f.spec->r, hp.mu, hp);
  }
  return total;
}

// Relative homotopy defect of the dominant degree row at the working
// resolution; anchors the stopping floor at the scale the grid can certify.
double measure_rel_defect(const Calibration<GridForm>& w, const SolverConfig& cfg) {
  const GridForm* probe = nullptr;
  double best = 0.0;
  for (auto& [sk, f] : w.comp) {
    if (sk.second < 0) continue;
    double v = f.max_abs();
    if (v > best) {
      best = v;
      probe = &f;
    }
  }
  if (!probe || best <= 0.0) return 0.0;
  double denom = grid_holder_norm(*probe, probe->spec->r, 0, cfg.holder.mu,
                                  std::vector<double>{1.0}, cfg.holder);
  if (denom <= 0.0) return 0.0;
  return homotopy_residual(*probe, 0.3, cfg.kernel, cfg.holder) / denom;
}

} // namespace

void SolverConfig::validate() const {
  if (sigma_schedule != "exp")
    throw std::invalid_argument("solver: only the exponential shrink schedule is supported");
  if (k_max < 1) throw std::invalid_argument("solver: need at least one step");
  if (!(abs_floor > 0.0))
    throw std::invalid_argument("solver: stopping floor must be positive");
  if (!(bracket_lo > 0.0) || !(bracket_hi > bracket_lo) || bracket_hi > 1.0)
    throw std::invalid_argument("solver: radius bracket must satisfy 0 < lo < hi <= 1");
  if (!(eps > 0.0) || eps >= 0.5)
    throw std::invalid_argument("solver: gauge band must sit inside (0, 1/2)");
  if (!(restart_shrink > 0.0) || restart_shrink >= 1.0)
    throw std::invalid_argument("solver: restart shrink must sit inside (0, 1)");
  if (h_max < 1 || h_max > 4)
    throw std::invalid_argument("solver: stencil order cap must be 1..4");
  if (max_restarts < 0) throw std::invalid_argument("solver: negative restart budget");
  if (bisect_iters < 1) throw std::invalid_argument("solver: bisection needs iterations");
  if (grid_nodes != 0 && grid_nodes < 5)
    throw std::invalid_argument("solver: need at least 5 nodes per axis");
  if (!(integrability_tol > 0.0))
    throw std::invalid_argument("solver: integrability screen needs a positive tolerance");
  if (!(h_fallback > 0.0) || !(interior_c_default > 0.0))
    throw std::invalid_argument("solver: gate constants must be positive");
}

double limiting_radius_ratio(int terms) {
  double p = 1.0;
  for (int k = 0; k <= terms; ++k) p *= 1.0 - std::exp(double(-k - 2));
  return p;
}

std::string IterationTrace::to_csv() const {
  std::ostringstream os;
  os << "k,r_k,sigma_k,a_k,b_k,residual_max,seconds\n";
  os << std::setprecision(17);
  for (auto& s : steps)
    os << s.k << ',' << s.r << ',' << s.sigma << ',' << s.a << ',' << s.b << ','
       << s.residual_max << ',' << s.seconds << '\n';
  return os.str();
}

double chain_row_bound(const Calibration<PolyForm<cd>>& omega, const WeightSequence& seq,
                       int h_trunc, const HolderParams& hp) {
  double c = 0.0;
  std::vector<double> S = weight_prefix(seq, h_trunc);
  for (int s = 1; s <= omega.m; ++s)
    c = std::max(c, holder_norm(omega.at(s, -1), h_trunc, hp.mu, S, hp));
  return c;
}

WeightLedger seed_weight_ledger(const Calibration<PolyForm<cd>>& omega,
                                const SolverConfig& cfg) {
  validate(omega);
  WeightLedger led;
  led.n = omega.comp.begin()->second.dom.n;
  led.K = cfg.k_max + 2;
  std::vector<double> phi(static_cast<size_t>(led.K + 1), 0.0);
  for (int s = 1; s <= omega.m; ++s)
    for (int j = 0; j <= led.K; ++j)
      phi[size_t(j)] =
          std::max(phi[size_t(j)], max_deriv_sup(omega.at(s, -1), j, cfg.holder));
  led.A = weight_base_magnitudes(led.n, led.K, phi);
  led.r_caps.assign(static_cast<size_t>(led.K + 1), kInf);
  led.l_caps.assign(static_cast<size_t>(led.K + 1), kInf);
  led.seq = build_weights(led.n, led.K, led.A, led.r_caps, led.l_caps);
  led.seq_plain = build_weights(led.n, led.K, led.A);
  return led;
}

RecalParameter<GridForm> build_step_parameter(const Calibration<GridForm>& omega_k,
                                              double r_k, double sigma_k,
                                              const SolverConfig& cfg) {
  validate(omega_k);
  if (!(sigma_k > 0.0 && sigma_k < 1.0))
    throw std::invalid_argument("step: shrink factor must sit inside (0, 1)");
  GridSpecPtr base = omega_k.comp.begin()->second.spec;
  if (std::abs(base->r - r_k) > 1e-9 * std::max(r_k, base->r))
    throw std::invalid_argument("step: grid radius does not match the requested radius");
  const int m = omega_k.m;
  const int n = base->n;
  const int nodes = base->m;
  const double smk = sigma_k / double(m + 1);

  // one sub-ball per ladder level; the innermost lands exactly on the next
  // step's radius r_k (1 - sigma_k)
  std::vector<GridSpecPtr> lad(static_cast<size_t>(m + 2));
  lad[0] = base;
  for (int l = 1; l <= m; ++l)
    lad[size_t(l)] = make_grid(n, r_k * (1.0 - double(l) * smk), nodes);
  lad[size_t(m + 1)] = make_grid(n, r_k * (1.0 - sigma_k), nodes);

  // calibration rows restricted to each level, filled on demand from the
  // level-0 originals so interpolation error never compounds
  std::map<std::tuple<int, int, int>, GridForm> cache;
  auto om_at = [&](int s, int k, int lin) -> const GridForm& {
    auto key = std::make_tuple(s, k, lin);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    const GridForm& src = omega_k.at(s, k);
    GridForm v = lin == 0 ? src : resample(src, lad[size_t(lin)]);
    return cache.emplace(key, std::move(v)).first->second;
  };

  // decreasing recursion over the degree: each component is one homotopy
  // transform of the row plus the two cross terms with the higher-degree
  // components already built one level further out
  std::map<StageIndex, GridForm> born;
  for (int t = m; t >= 0; --t) {
    const int lin = m - t;
    for (int s = 0; s + t <= m; ++s) {
      GridForm arg = om_at(s, t, lin);
      if (s + t + 1 <= m)
        arg = add(arg, wedge(om_at(s + t + 1, -1, lin), born.at({s, t + 1})));
      if (s >= 1) {
        GridForm tail = wedge(born.at({s - 1, t + 1}), om_at(s, -1, lin));
        arg = (t % 2 == 0) ? add(arg, tail) : sub(arg, tail);
      }
      if (arg.is_zero_stored()) {
        born.emplace(StageIndex{s, t},
                     grid_zero(lad[size_t(lin + 1)], t,
                               omega_k.p[size_t(s + t)], omega_k.p[size_t(s)]));
      } else {
        double srel = 1.0 - lad[size_t(lin + 1)]->r / lad[size_t(lin)]->r;
        born.emplace(StageIndex{s, t},
                     snap_to(neg(leray_koppelman(arg, srel, cfg.kernel)),
                             lad[size_t(lin + 1)]));
      }
    }
  }

  RecalParameter<GridForm> out;
  out.m = m;
  out.p = omega_k.p;
  for (auto& [sk, f] : born)
    out.comp.emplace(sk, f.spec == lad[size_t(m + 1)]
                             ? std::move(f)
                             : resample(f, lad[size_t(m + 1)]));

  for (int s = 0; s <= m; ++s) {
    double v = sup_operator_norm(out.at(s, 0));
    if (!(v < cfg.eps))
      throw RadiusTooLarge("radius too large: stage gauge reaches " +
                           std::to_string(v) + " at stage " + std::to_string(s));
  }
  return out;
}

double update_weights(WeightLedger& led, const Calibration<GridForm>& omega_k,
                      const std::vector<GridForm>& g_fwd,
                      const std::vector<GridForm>& g_inv, int k,
                      const SolverConfig& cfg, StepRecord* rec) {
  if (k < 0 || k + 1 > led.K)
    throw std::invalid_argument("weights: step index outside the ledger horizon");
  if (int(led.r_caps.size()) != led.K + 1 || int(led.l_caps.size()) != led.K + 1)
    throw std::invalid_argument("weights: ledger not seeded");
  const HolderParams& hp = cfg.holder;
  // orders past the stencil limit reuse the top measurable estimates
  const int order = std::min(k + 1, cfg.h_max);

  // smallest ratio keeps the bound valid for every sampled component, so the
  // caps take the min even where a looser convention would average
  double r_cap = kInf, l_cap = kInf;
  std::vector<std::pair<double, double>> r_samples, l_samples;
  for (auto& [sk, f] : omega_k.comp) {
    if (sk.second < 0) continue; // caps watch the decaying rows only
    for (auto& [key, v] : f.comp) {
      (void)v;
      double num = comp_mu_norm(f, key, hp);
      if (num <= 1e-300) continue;
      double den = deriv_mu_norm_sum(f, key, order, hp);
      if (den <= 0.0) continue;
      r_cap = std::min(r_cap, num / den);
      r_samples.emplace_back(num, den);
    }
  }
  auto gauge_sample = [&](const GridForm& g) {
    double num = comp_mu_norm(g, 0u, hp);
    if (num <= 1e-300) return;
    double den = deriv_mu_norm_sum(g, 0u, order, hp);
    if (den <= 0.0) return;
    l_cap = std::min(l_cap, std::ldexp(num / den, -k - 1));
    l_samples.emplace_back(num, den);
  };
  for (auto& g : g_fwd) gauge_sample(g);
  for (auto& g : g_inv) gauge_sample(g);

  led.r_caps[size_t(k + 1)] = r_cap;
  led.l_caps[size_t(k + 1)] = l_cap;
  led.seq = build_weights(led.n, led.K, led.A, led.r_caps, led.l_caps);
  double S_next = led.seq.at(k + 1);

  // the refreshed weight must leave both measured bounds true after the fact
  for (auto& [num, den] : r_samples)
    if (S_next * den > num * (1.0 + 1e-9))
      throw std::logic_error("weights: refreshed weight breaks the row derivative bound");
  for (auto& [num, den] : l_samples)
    if (S_next * den > std::ldexp(num, -k - 1) * (1.0 + 1e-9))
      throw std::logic_error("weights: refreshed weight breaks the gauge derivative bound");

  if (rec) {
    rec->S_next = S_next;
    rec->R_cap = r_cap;
    rec->L_cap = l_cap;
  }
  return S_next;
}

double choose_initial_radius(const Calibration<PolyForm<cd>>& omega,
                             const SolverConfig& cfg, RadiusSearch* out) {
  cfg.validate();
  validate(omega);
  const BallDomain& dom = omega.comp.begin()->second.dom;
  if (std::abs(dom.r - 1.0) > 1e-12)
    throw std::invalid_argument("radius search: the input must live on the unit ball");
  const int m = omega.m;
  const int n = dom.n;

  bool flat = true;
  for (auto& [sk, f] : omega.comp)
    if (sk.second >= 0 && !f.is_zero_stored()) {
      flat = false;
      break;
    }
  if (flat) {
    if (out) *out = RadiusSearch{cfg.bracket_hi, 0.0, 0.0, 0.0, 0.0, 0.0};
    return cfg.bracket_hi;
  }

  WeightLedger led = seed_weight_ledger(omega, cfg);
  double c0 = chain_row_bound(omega, led.seq_plain, cfg.h_max, cfg.holder);
  double C = cfg.kernel.interior_c > 0.0 ? cfg.kernel.interior_c : cfg.interior_c_default;
  double L = C;
  for (int s = m; s >= 1; --s) L = std::max(C, 2.0 * c0 * C * L);
  const double smk0 = std::exp(-2.0) / double(m + 1);
  const int e_gate = (m + 1) * s_law(n, 0);

  double h_fit = cfg.fit_h ? 0.0 : cfg.h_fallback; // 0 marks "not fitted yet"
  RadiusSearch best;

  auto gate = [&](double r) -> bool {
    auto w = to_grid(omega, make_grid(n, r, cfg.grid_nodes));
    double a0 = stage_norm_max(w, r, 0, {1.0}, cfg.holder, nullptr, nullptr);
    double bound = pow_loss(smk0, e_gate, L * a0);
    double bound_alt = pow_loss(smk0, nu_law(m, 0, n), L * a0);
    if (!(bound < cfg.eps) || !(a0 <= 1.0)) return false;

    if (h_fit <= 0.0) {
      // a single two-step probe calibrates the decay constant of the gate;
      // later candidates reuse it so the pass set stays monotone in r
      try {
        auto step = build_step_parameter(w, r, cfg.sigma_at(0), cfg);
        GridSpecPtr nxt = step.at(0, 0).spec;
        auto w1 = recalibrate(step, resample_cal(w, nxt));
        double a1 = stage_norm_max(w1, nxt->r, 0, {1.0}, cfg.holder, nullptr, nullptr);
        double denom = pow_loss(smk0, nu_law(m, 0, n), a0 * a0);
        double h = a1 > 0.0 && std::isfinite(denom) && denom > 0.0 ? a1 / denom
                                                                   : cfg.h_fallback;
        h_fit = std::clamp(h, 1e-8, 1e8);
      } catch (const RadiusTooLarge&) {
        return false;
      }
    }

    // partial series of the squared cascade against the fixed threshold
    double beta = pow_loss(smk0, e_gate, h_fit * a0);
    double sum = 0.0;
    for (int k = 0; k <= cfg.k_max; ++k) {
      sum += beta;
      if (!std::isfinite(sum) || sum >= beta_gate_threshold()) return false;
      double lb = std::log(4.0 * h_fit) + double(gamma_law(m, k, n)) +
                  2.0 * std::log(beta);
      if (lb > 700.0) return false;
      beta = std::exp(lb);
      if (beta == 0.0) break;
    }
    best = RadiusSearch{r, a0, h_fit, sum, bound, bound_alt};
    return true;
  };

  if (gate(cfg.bracket_hi)) {
    if (out) *out = best;
    return cfg.bracket_hi;
  }
  if (!gate(cfg.bracket_lo))
    throw std::runtime_error("radius search: problem too rough inside the given bracket");
  double lo = cfg.bracket_lo, hi = cfg.bracket_hi;
  for (int i = 0; i < cfg.bisect_iters; ++i) {
    double mid = std::sqrt(lo * hi); // bisect in the log of the radius
    if (!(mid > lo && mid < hi)) break;
    if (gate(mid))
      lo = mid;
    else
      hi = mid;
  }
  // the last passing evaluation is exactly the returned bracket end
  if (out) *out = best;
  return lo;
}

namespace {

SolveResult run_at_radius(const Calibration<PolyForm<cd>>& omega, double r0,
                          const SolverConfig& cfg, const WeightLedger& led0,
                          double c0, double h_used) {
  using clock = std::chrono::steady_clock;
  const int m = omega.m;
  const int n = omega.comp.begin()->second.dom.n;

  SolveResult res{};
  WeightLedger led = led0;
  IterationTrace& tr = res.trace;
  tr.m = m;
  tr.n = n;
  tr.r0 = r0;
  tr.c0 = c0;
  tr.h_fit = h_used;
  tr.floor = cfg.abs_floor;

  GridSpecPtr sp = make_grid(n, r0, cfg.grid_nodes);
  Calibration<GridForm> w = to_grid(omega, sp);
  double rel_defect = measure_rel_defect(w, cfg);
  RecalParameter<GridForm> comp = zero_param_grid(sp, omega.p);

  double r_k = r0;
  double prev_a = kInf;
  int grow_run = 0;
  int applied = 0;
  bool conv = false;
  std::string status = "max iterations reached";

  for (int k = 0;; ++k) {
    auto t0 = clock::now();
    StepRecord rec{};
    rec.k = k;
    rec.r = r_k;
    rec.sigma = cfg.sigma_at(k);

    std::vector<GridForm> g_fwd, g_inv;
    for (int s = 0; s <= m; ++s) {
      g_fwd.push_back(identity_plus(comp.at(s, 0)));
      g_inv.push_back(gauge_inverse_of_identity_plus(comp.at(s, 0)));
    }
    update_weights(led, w, g_fwd, g_inv, k, cfg, &rec);

    const int h = std::min(k, cfg.h_max);
    std::vector<double> S = weight_prefix(led.seq, h);
    rec.a = stage_norm_max(w, r_k, h, S, cfg.holder, &rec.stage_norm, &rec.chain_norm);
    rec.residual_max = rec.a;
    rec.gauge_norm = 0.0;
    for (auto& g : g_fwd)
      rec.gauge_norm =
          std::max(rec.gauge_norm, grid_holder_norm(g, r_k, h, cfg.holder.mu, S, cfg.holder));
    for (auto& g : g_inv)
      rec.gauge_norm =
          std::max(rec.gauge_norm, grid_holder_norm(g, r_k, h, cfg.holder.mu, S, cfg.holder));
    rec.b = pow_loss(rec.sigma / double(m + 1), (m + 1) * s_law(n, k), h_used * rec.a);

    if (k == 0) tr.floor = std::max(cfg.abs_floor, rel_defect * rec.a);

    if (rec.a <= tr.floor) {
      conv = true;
      status = "converged";
      rec.seconds = std::chrono::duration<double>(clock::now() - t0).count();
      tr.steps.push_back(std::move(rec));
      break;
    }
    if (rec.a > prev_a) {
      if (++grow_run >= 2) {
        status = "diverged: stage norms grew on two consecutive steps";
        rec.seconds = std::chrono::duration<double>(clock::now() - t0).count();
        tr.steps.push_back(std::move(rec));
        break;
      }
    } else {
      grow_run = 0;
    }
    prev_a = rec.a;
    if (k == cfg.k_max) {
      rec.seconds = std::chrono::duration<double>(clock::now() - t0).count();
      tr.steps.push_back(std::move(rec));
      break;
    }

    RecalParameter<GridForm> step = build_step_parameter(w, r_k, rec.sigma, cfg);
    GridSpecPtr nxt = step.at(0, 0).spec;
    w = recalibrate(step, resample_cal(w, nxt));
    comp = compose_parameters(resample_par(comp, nxt), step);
    r_k = nxt->r;
    ++applied;

    rec.seconds = std::chrono::duration<double>(clock::now() - t0).count();
    tr.steps.push_back(std::move(rec));
  }

  res.converged = conv;
  res.status = status;
  res.r0 = r0;
  res.r_final = r_k;
  res.iterations = applied;
  res.eta = comp;
  for (int s = 0; s <= m; ++s) res.gauge.push_back(identity_plus(comp.at(s, 0)));
  res.omega_final = w;
  res.weights = led;

  // certification against the exact input restricted to the final grid
  GridSpecPtr fin = res.eta.at(0, 0).spec;
  Calibration<GridForm> w0 = to_grid(omega, fin);
  for (auto& [sk, v] : system_residual(res.eta, w0, cfg.holder)) {
    (void)sk;
    res.system_res = std::max(res.system_res, v);
  }
  for (double v : sigma_residual(res.eta, w0, cfg.holder))
    res.sigma_res = std::max(res.sigma_res, v);
  return res;
}

} // namespace

SolveResult solve(const Calibration<PolyForm<cd>>& omega, const SolverConfig& cfg) {
  cfg.validate();
  validate(omega);
  const BallDomain& dom = omega.comp.begin()->second.dom;
  if (std::abs(dom.r - 1.0) > 1e-12)
    throw std::invalid_argument("solve: the input must live on the unit ball");
  const int m = omega.m;
  const int n = dom.n;

  bool flat = true;
  for (auto& [sk, f] : omega.comp)
    if (sk.second >= 0 && !f.is_zero_stored()) {
      flat = false;
      break;
    }
  if (flat) {
    // already resolved by the trivial parameter; report without iterating
    SolveResult res{};
    res.converged = true;
    res.status = "converged: all decaying rows vanish";
    res.r0 = res.r_final = cfg.bracket_hi;
    GridSpecPtr sp = make_grid(n, cfg.bracket_hi, cfg.grid_nodes);
    res.eta = zero_param_grid(sp, omega.p);
    for (int s = 0; s <= m; ++s) res.gauge.push_back(identity_plus(res.eta.at(s, 0)));
    res.omega_final = to_grid(omega, sp);
    res.weights = seed_weight_ledger(omega, cfg);
    res.trace.m = m;
    res.trace.n = n;
    res.trace.r0 = res.r0;
    res.trace.c0 = chain_row_bound(omega, res.weights.seq_plain, cfg.h_max, cfg.holder);
    res.trace.floor = cfg.abs_floor;
    for (auto& [sk, v] : system_residual(res.eta, res.omega_final, cfg.holder)) {
      (void)sk;
      res.system_res = std::max(res.system_res, v);
    }
    for (double v : sigma_residual(res.eta, res.omega_final, cfg.holder))
      res.sigma_res = std::max(res.sigma_res, v);
    return res;
  }

  double worst = 0.0;
  for (auto& [sk, v] : integrability_residual(omega, cfg.holder)) {
    (void)sk;
    worst = std::max(worst, v);
  }
  if (worst > cfg.integrability_tol)
    throw std::invalid_argument("solve: input fails the integrability screen, defect " +
                                std::to_string(worst));

  RadiusSearch search;
  double r0 = choose_initial_radius(omega, cfg, &search);
  WeightLedger led0 = seed_weight_ledger(omega, cfg);
  double c0 = chain_row_bound(omega, led0.seq_plain, cfg.h_max, cfg.holder);
  double h_used = search.h_used > 0.0 ? search.h_used : cfg.h_fallback;

  int restarts = 0;
  std::string fail;
  for (int attempt = 0; attempt <= cfg.max_restarts; ++attempt) {
    try {
      SolveResult res = run_at_radius(omega, r0, cfg, led0, c0, h_used);
      res.restarts = restarts;
      return res;
    } catch (const RadiusTooLarge& e) {
      fail = e.what();
      r0 *= cfg.restart_shrink;
      ++restarts;
    }
  }
  throw RadiusTooLarge("solve: " + fail + " (after " + std::to_string(restarts) +
                       " restarts)");
}

DecayReport quadratic_decay_report(const IterationTrace& tr) {
  DecayReport rep;
  rep.chain_bounded = true;
  rep.gauge_bounded = true;
  for (auto& s : tr.steps) {
    if (s.chain_norm > 4.0 * tr.c0 * (1.0 + 1e-6) + 1e-12) rep.chain_bounded = false;
    if (!(s.gauge_norm < 2.0)) rep.gauge_bounded = false;
  }

  std::vector<const StepRecord*> use;
  for (auto& s : tr.steps)
    if (s.a > std::max(tr.floor, 0.0)) use.push_back(&s);
  if (use.size() < 3) {
    rep.enough_steps = false;
    rep.note = "fewer than three steps above the stopping floor; decay statistics skipped";
    return rep;
  }
  rep.enough_steps = true;

  for (size_t i = 0; i + 1 < use.size(); ++i) {
    double ak = use[i]->a, a1 = use[i + 1]->a;
    rep.step_ratio.push_back(a1 / ak);
    double smk = use[i]->sigma / double(tr.m + 1);
    double dl = -double(nu_law(tr.m, use[i]->k, tr.n)) * std::log(smk) +
                2.0 * std::log(ak);
    double lr = std::log(a1) - dl;
    rep.quad_ratio.push_back(lr < -700.0 ? 0.0 : std::exp(std::min(lr, 700.0)));
  }
  rep.h_emp = *std::max_element(rep.quad_ratio.begin(), rep.quad_ratio.end());

  int run = 1, best_run = 1;
  for (size_t i = 0; i + 1 < rep.step_ratio.size(); ++i) {
    run = rep.step_ratio[i + 1] < rep.step_ratio[i] ? run + 1 : 1;
    best_run = std::max(best_run, run);
  }
  rep.longest_decreasing_run = best_run;
  rep.superlinear = best_run >= 3;
  rep.quad_bounded = rep.h_emp <= 10.0 * std::max(rep.quad_ratio.front(), 1e-300);
  rep.flagged = !rep.quad_bounded ||
                !(rep.step_ratio.back() < rep.step_ratio.front());
  return rep;
}

} // namespace dbf
