#include "dbarforge/kernels.hpp"

#include <cmath>
#include <mutex>
#include <optional>
#include <stdexcept>

namespace dbf {

KernelConfig KernelConfig::scaled(double f) const {
  auto s = [&](int v) { return std::max(2, int(std::lround(v * f))); };
  KernelConfig c = *this;
  c.vol_rad = s(vol_rad);
  c.vol_ang = s(vol_ang);
  c.s3_alpha = s(s3_alpha);
  c.s3_ang = s(s3_ang);
  c.bnd_alpha = s(bnd_alpha);
  c.bnd_ang = s(bnd_ang);
  return c;
}

namespace {

constexpr double kPi = 3.14159265358979323846;

struct GaussRule {
  std::vector<double> x, w; // on [0, 1]
};

// Gauss-Legendre by Newton iteration on the Legendre recurrence
const GaussRule& gauss01(int n) {
  static std::map<int, GaussRule> cache;
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  GaussRule r;
  r.x.resize(size_t(n));
  r.w.resize(size_t(n));
  for (int i = 0; i < n; ++i) {
    double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      double dp = n * (x * p1 - p0) / (x * x - 1.0);
      double dx = p1 / dp;
      x -= dx;
      if (std::fabs(dx) < 1e-15) break;
    }
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    double dp = n * (x * p1 - p0) / (x * x - 1.0);
    r.x[size_t(n - 1 - i)] = (x + 1.0) / 2.0;
    r.w[size_t(n - 1 - i)] = 1.0 / ((1.0 - x * x) * dp * dp);
  }
  return cache.emplace(n, std::move(r)).first->second;
}

// uniform view over PolyRep and GridRep inputs
struct Evaluator {
  const GridForm* g = nullptr;
  const PolyForm<cd>* p = nullptr;
  int n = 1, q = 0, rows = 1, cols = 1;
  double r = 1.0;

  static Evaluator of(const GridForm& gf) {
    Evaluator e;
    e.g = &gf;
    e.n = gf.spec->n;
    e.q = gf.q;
    e.rows = gf.rows;
    e.cols = gf.cols;
    e.r = gf.spec->r;
    return e;
  }
  static Evaluator of(const PolyForm<cd>& pf) {
    Evaluator e;
    e.p = &pf;
    e.n = pf.dom.n;
    e.q = pf.q;
    e.rows = pf.rows;
    e.cols = pf.cols;
    e.r = pf.dom.r;
    return e;
  }

  int pe() const { return rows * cols; }
  bool has(unsigned key) const {
    return g ? g->has(key) : p->comp.count(key) != 0;
  }
  // stored but identically zero components contribute nothing; dropping them
  // skips whole quadrature passes (dbar of a constant form is the usual case)
  bool carries_data(unsigned key) const {
    if (g) {
      auto it = g->comp.find(key);
      if (it == g->comp.end()) return false;
      for (const cd& v : it->second)
        if (v != cd(0.0, 0.0)) return true;
      return false;
    }
    auto it = p->comp.find(key);
    if (it == p->comp.end()) return false;
    for (const auto& e : it->second.e)
      if (!e.is_zero()) return true;
    return false;
  }
  void eval(unsigned key, const double* x, cd* out) const {
    if (g) {
      eval_component(*g, key, x, out);
      return;
    }
    auto it = p->comp.find(key);
    if (it == p->comp.end()) {
      for (int t = 0; t < pe(); ++t) out[t] = cd(0.0, 0.0);
      return;
    }
    std::array<cd, kMaxVars> z{};
    for (int j = 0; j < n; ++j) z[size_t(j)] = cd(x[2 * j], x[2 * j + 1]);
    for (int t = 0; t < pe(); ++t) out[t] = it->second.e[size_t(t)].eval(z);
  }
  void eval_all(const unsigned* keys, int nk, const double* x, cd* out) const {
    if (g) {
      eval_components(*g, keys, nk, x, out);
      return;
    }
    for (int k = 0; k < nk; ++k) eval(keys[k], x, out + size_t(k) * size_t(pe()));
  }
};

// one angular direction of the polar rule: unit vector, complex components,
// kernel factors conj(w_j), and the rule weight
struct AngularNode {
  double dir[2 * kMaxVars];
  cd w[kMaxVars];
  double wt;
};

std::vector<AngularNode> angular_nodes(int n, const KernelConfig& cfg) {
  std::vector<AngularNode> nodes;
  if (n == 1) {
    int N = cfg.vol_ang;
    nodes.reserve(size_t(N));
    for (int t = 0; t < N; ++t) {
      double th = 2.0 * kPi * t / N;
      AngularNode a{};
      a.dir[0] = std::cos(th);
      a.dir[1] = std::sin(th);
      a.w[0] = cd(a.dir[0], a.dir[1]);
      a.wt = 2.0 * kPi / N;
      nodes.push_back(a);
    }
    return nodes;
  }
  // n = 2: w = (cos(alpha) e^{i beta}, sin(alpha) e^{i gamma}); the surface
  // measure cos(alpha) sin(alpha) d(alpha) becomes ds/2 under s = sin^2(alpha)
  const GaussRule& ga = gauss01(cfg.s3_alpha);
  int nb = cfg.s3_ang;
  nodes.reserve(size_t(cfg.s3_alpha * nb * nb));
  for (int ia = 0; ia < cfg.s3_alpha; ++ia) {
    double s = ga.x[size_t(ia)];
    double ca = std::sqrt(1.0 - s), sa = std::sqrt(s);
    double wa = 0.5 * ga.w[size_t(ia)];
    for (int ib = 0; ib < nb; ++ib) {
      double beta = 2.0 * kPi * ib / nb;
      for (int ig = 0; ig < nb; ++ig) {
        double gam = 2.0 * kPi * ig / nb;
        AngularNode a{};
        a.w[0] = ca * cd(std::cos(beta), std::sin(beta));
        a.w[1] = sa * cd(std::cos(gam), std::sin(gam));
        a.dir[0] = a.w[0].real();
        a.dir[1] = a.w[0].imag();
        a.dir[2] = a.w[1].real();
        a.dir[3] = a.w[1].imag();
        a.wt = wa * (2.0 * kPi / nb) * (2.0 * kPi / nb);
        nodes.push_back(a);
      }
    }
  }
  return nodes;
}

// per-output-component contraction terms of the volume kernel
struct VolTerm {
  size_t buf;  // index into the input component buffers
  int j;       // kernel direction index
  double sign; // antisymmetrization sign
};

GridForm volume_core(const Evaluator& in, double r_out, int m_out,
                     const KernelConfig& cfg) {
  int n = in.n;
  if (in.q < 1)
    throw std::invalid_argument("volume transform needs a form of positive degree");
  if (!(r_out < in.r))
    throw std::invalid_argument("transform target must sit strictly inside the source ball");
  auto osp = make_grid(n, r_out, m_out ? m_out : 0);
  if (in.q > n) return grid_zero(osp, in.q - 1, in.rows, in.cols);

  GridForm out(osp, in.q - 1, in.rows, in.cols);
  int pe = in.pe();

  // input component buffers, one per stored key of degree q
  std::vector<unsigned> ikeys;
  for (unsigned key : component_keys(n, in.q))
    if (in.carries_data(key)) ikeys.push_back(key);
  if (ikeys.empty()) return grid_zero(osp, in.q - 1, in.rows, in.cols);
  std::vector<cd> ibuf(ikeys.size() * size_t(pe));
  std::optional<ComponentSampler> samp;
  if (in.g) samp.emplace(*in.g, ikeys);

  auto okeys = component_keys(n, in.q - 1);
  std::map<unsigned, std::vector<VolTerm>> terms;
  for (unsigned I : okeys) {
    auto& tl = terms[I];
    for (int j = 0; j < n; ++j) {
      if (I & (1u << j)) continue;
      unsigned K = I | (1u << j);
      for (size_t b = 0; b < ikeys.size(); ++b)
        if (ikeys[b] == K) tl.push_back({b, j, double(insert_sign(j, I))});
    }
  }

  auto ang = angular_nodes(n, cfg);
  const GaussRule& gr = gauss01(cfg.vol_rad);
  double norm = (n == 1) ? -1.0 / kPi : -1.0 / (kPi * kPi);

  std::map<unsigned, std::vector<cd>> acc;
  for (unsigned I : okeys) acc[I].assign(size_t(pe), cd(0, 0));
  std::vector<cd> uz(static_cast<size_t>(pe));

  size_t cnt = osp->count();
  std::array<double, 2 * kMaxVars> x{};
  double zeta[2 * kMaxVars];
  for (size_t pnode = 0; pnode < cnt; ++pnode) {
    osp->point(pnode, x);
    if (!osp->in_ball(x)) continue;
    double z2 = 0.0;
    for (int a = 0; a < 2 * n; ++a) z2 += x[size_t(a)] * x[size_t(a)];
    double cr = in.r * in.r - z2;

    bool subtract = cfg.subtract_singularity && n == 1;
    if (subtract) in.eval(ikeys.empty() ? 1u : ikeys[0], x.data(), uz.data());

    for (auto& [I, a] : acc) std::fill(a.begin(), a.end(), cd(0, 0));
    for (const AngularNode& an : ang) {
      double c = 0.0;
      for (int j = 0; j < n; ++j)
        c += x[size_t(2 * j)] * an.dir[2 * j] + x[size_t(2 * j + 1)] * an.dir[2 * j + 1];
      double R = -c + std::sqrt(c * c + cr);
      for (int ir = 0; ir < cfg.vol_rad; ++ir) {
        double rho = R * gr.x[size_t(ir)];
        double wt = R * gr.w[size_t(ir)] * an.wt;
        for (int a = 0; a < 2 * n; ++a) zeta[a] = x[size_t(a)] + rho * an.dir[a];
        if (samp)
          (*samp)(zeta, ibuf.data());
        else
          in.eval_all(ikeys.data(), int(ikeys.size()), zeta, ibuf.data());
        if (subtract)
          for (size_t t = 0; t < ibuf.size(); ++t) ibuf[t] -= uz[t % size_t(pe)];
        for (unsigned I : okeys) {
          auto& a2 = acc[I];
          for (const VolTerm& tm : terms[I]) {
            cd k = tm.sign * wt * std::conj(an.w[tm.j]);
            const cd* src = ibuf.data() + tm.buf * size_t(pe);
            for (int t = 0; t < pe; ++t) a2[size_t(t)] += k * src[t];
          }
        }
      }
    }
    for (unsigned I : okeys) {
      auto& dst = out.at(I);
      auto& a2 = acc[I];
      for (int t = 0; t < pe; ++t)
        dst[pnode * size_t(pe) + size_t(t)] = norm * a2[size_t(t)];
    }
    if (subtract) {
      // the subtracted term integrates exactly: T(1) = conj(z) on the disk
      auto& dst = out.at(0u);
      cd zb(x[0], -x[1]);
      for (int t = 0; t < pe; ++t) dst[pnode * size_t(pe) + size_t(t)] += zb * uz[size_t(t)];
    }
  }
  extend_smooth(out);
  return out;
}

// Leray sphere correction, n = 2 and output degree 0 only. The support
// function is Phi = sum_j conj(zeta_j) (zeta_j - z_j), nonvanishing for z
// inside the sphere.
GridForm boundary_core(const Evaluator& in, double r_out, int m_out,
                       const KernelConfig& cfg) {
  int n = in.n;
  if (!(r_out < in.r))
    throw std::invalid_argument("transform target must sit strictly inside the source ball");
  auto osp = make_grid(n, r_out, m_out ? m_out : 0);
  if (in.q > n) return grid_zero(osp, in.q - 1, in.rows, in.cols);
  GridForm out = grid_zero(osp, in.q - 1, in.rows, in.cols);
  if (n == 1 || in.q != 1) return out; // empty kernel family
  if (!in.carries_data(0b01u) && !in.carries_data(0b10u)) return out;
  int pe = in.pe();

  // sphere nodes with the analytic pullback jacobians of
  // d(conj(zeta_k)) ^ d(zeta_1) ^ d(zeta_2)
  struct BndNode {
    double zeta[4];
    cd z1, z2;
    cd jac[2];
    double wt;
  };
  std::vector<BndNode> nodes;
  const GaussRule& ga = gauss01(cfg.bnd_alpha);
  int nb = cfg.bnd_ang;
  double r = in.r;
  for (int ia = 0; ia < cfg.bnd_alpha; ++ia) {
    double al = 0.5 * kPi * ga.x[size_t(ia)];
    double wa = 0.5 * kPi * ga.w[size_t(ia)];
    double ca = std::cos(al), sa = std::sin(al);
    for (int ib = 0; ib < nb; ++ib) {
      double be = 2.0 * kPi * ib / nb;
      cd eb(std::cos(be), std::sin(be));
      for (int ig = 0; ig < nb; ++ig) {
        double gm = 2.0 * kPi * ig / nb;
        cd eg(std::cos(gm), std::sin(gm));
        BndNode bn{};
        bn.z1 = r * ca * eb;
        bn.z2 = r * sa * eg;
        bn.zeta[0] = bn.z1.real();
        bn.zeta[1] = bn.z1.imag();
        bn.zeta[2] = bn.z2.real();
        bn.zeta[3] = bn.z2.imag();
        // partials wrt (alpha, beta, gamma)
        cd d1[3] = {-r * sa * eb, cd(0, 1) * bn.z1, cd(0, 0)};
        cd d2[3] = {r * ca * eg, cd(0, 0), cd(0, 1) * bn.z2};
        cd c1[3] = {std::conj(d1[0]), std::conj(d1[1]), std::conj(d1[2])};
        cd c2[3] = {std::conj(d2[0]), std::conj(d2[1]), std::conj(d2[2])};
        auto det3 = [](const cd* a, const cd* b, const cd* c) {
          return a[0] * (b[1] * c[2] - b[2] * c[1]) -
                 a[1] * (b[0] * c[2] - b[2] * c[0]) +
                 a[2] * (b[0] * c[1] - b[1] * c[0]);
        };
        bn.jac[0] = det3(c1, d1, d2); // k = 1
        bn.jac[1] = det3(c2, d1, d2); // k = 2
        bn.wt = wa * (2.0 * kPi / nb) * (2.0 * kPi / nb);
        nodes.push_back(bn);
      }
    }
  }

  // normalization 1/(2 pi i)^2 with the parametrization orientation folded in,
  // pinned by the homotopy identity on dbar-exact test forms
  const double kBndConst = -1.0 / (4.0 * kPi * kPi);

  // input values on the sphere do not depend on the output node, so sample
  // them once per quadrature node up front
  const unsigned bkeys[2] = {0b01u, 0b10u};
  std::vector<cd> sphere_vals(nodes.size() * 2 * size_t(pe));
  for (size_t b = 0; b < nodes.size(); ++b)
    in.eval_all(bkeys, 2, nodes[b].zeta, sphere_vals.data() + b * 2 * size_t(pe));

  std::vector<cd> accv(static_cast<size_t>(pe));
  size_t cnt = osp->count();
  std::array<double, 2 * kMaxVars> x{};
  for (size_t pnode = 0; pnode < cnt; ++pnode) {
    osp->point(pnode, x);
    if (!osp->in_ball(x)) continue;
    cd zc1(x[0], x[1]), zc2(x[2], x[3]);
    std::fill(accv.begin(), accv.end(), cd(0, 0));
    for (size_t bi = 0; bi < nodes.size(); ++bi) {
      const BndNode& bn = nodes[bi];
      const cd* u1 = sphere_vals.data() + bi * 2 * size_t(pe);
      const cd* u2 = u1 + size_t(pe);
      cd w1 = bn.z1 - zc1, w2 = bn.z2 - zc2;
      double rho2 = std::norm(w1) + std::norm(w2);
      cd phi = std::conj(bn.z1) * w1 + std::conj(bn.z2) * w2;
      cd num = std::conj(w1) * std::conj(bn.z2) - std::conj(w2) * std::conj(bn.z1);
      cd kern = num / (rho2 * phi) * bn.wt;
      cd k1 = kern * bn.jac[0], k2 = kern * bn.jac[1];
      for (int t = 0; t < pe; ++t) accv[size_t(t)] += k1 * u1[t] + k2 * u2[t];
    }
    auto& dst = out.at(0u);
    for (int t = 0; t < pe; ++t)
      dst[pnode * size_t(pe) + size_t(t)] = kBndConst * accv[size_t(t)];
  }
  extend_smooth(out);
  return out;
}

} // namespace

GridForm bm_volume_transform(const GridForm& u, double r_out, const KernelConfig& cfg) {
  return volume_core(Evaluator::of(u), r_out, u.spec->m, cfg);
}
GridForm bm_volume_transform(const PolyForm<cd>& u, double r_out, int m_out,
                             const KernelConfig& cfg) {
  return volume_core(Evaluator::of(u), r_out, m_out, cfg);
}

GridForm boundary_transform(const GridForm& u, double r_out, const KernelConfig& cfg) {
  return boundary_core(Evaluator::of(u), r_out, u.spec->m, cfg);
}
GridForm boundary_transform(const PolyForm<cd>& u, double r_out, int m_out,
                            const KernelConfig& cfg) {
  return boundary_core(Evaluator::of(u), r_out, m_out, cfg);
}

namespace {

GridForm leray_core(const Evaluator& in, double sigma, int m_out,
                    const KernelConfig& cfg) {
  if (!(sigma > 0.0 && sigma < 1.0))
    throw std::invalid_argument("sigma must lie in (0, 1)");
  double r_out = in.r * (1.0 - sigma);
  GridForm v = volume_core(in, r_out, m_out, cfg);
  if (in.n >= 2 && in.q == 1) {
    GridForm b = boundary_core(in, r_out, m_out, cfg);
    return add(v, b);
  }
  return v;
}

} // namespace

GridForm leray_koppelman(const GridForm& u, double sigma, const KernelConfig& cfg) {
  return leray_core(Evaluator::of(u), sigma, u.spec->m, cfg);
}
GridForm leray_koppelman(const PolyForm<cd>& u, double sigma, int m_out,
                         const KernelConfig& cfg) {
  return leray_core(Evaluator::of(u), sigma, m_out, cfg);
}

double homotopy_residual(const GridForm& u, double sigma, const KernelConfig& cfg,
                         const HolderParams& hp) {
  double r_out = u.spec->r * (1.0 - sigma);
  GridForm Tu = leray_koppelman(u, sigma, cfg);
  GridForm dTu = dbar_grid(Tu);
  GridForm resid = sub(grid_restrict(u, r_out), dTu);
  GridForm du = dbar_grid(u);
  if (du.q <= u.spec->n) {
    GridForm Tdu = leray_koppelman(du, sigma, cfg);
    resid = sub(resid, Tdu);
  }
  std::vector<double> S{1.0};
  return grid_holder_norm(resid, r_out, 0, hp.mu, S, hp);
}

InteriorFitReport fit_interior_constant(const std::vector<GridForm>& samples,
                                        const std::vector<int>& hs,
                                        const std::vector<double>& sigmas,
                                        const std::vector<double>& S,
                                        const KernelConfig& cfg,
                                        const HolderParams& hp) {
  if (samples.empty())
    throw std::invalid_argument("interior fit needs at least one sample");
  InteriorFitReport rep;
  double sxy = 0.0, sxx = 0.0;
  bool any = false;
  for (const GridForm& u : samples) {
    double r = u.spec->r;
    int n = u.spec->n;
    for (double sg : sigmas) {
      GridForm Tu = leray_koppelman(u, sg, cfg);
      for (size_t ih = 0; ih < hs.size(); ++ih) {
        int h = hs[ih];
        double den_norm = grid_holder_norm(u, r, h, hp.mu, S, hp);
        if (den_norm == 0.0) continue;
        any = true;
        double num = grid_holder_norm(Tu, r * (1.0 - sg), h + 1, hp.mu, S, hp);
        double pred = std::pow(sg, -double(cfg.s_law(n, h))) * den_norm;
        double ratio = num / pred;
        rep.c_max = std::max(rep.c_max, ratio);
        auto [it, fresh] = rep.per_h_max.try_emplace(h, ratio);
        if (!fresh) it->second = std::max(it->second, ratio);
        sxy += num * pred;
        sxx += pred * pred;
      }
    }
  }
  if (!any) throw std::invalid_argument("interior fit: every sample norm vanishes");
  rep.c_lsq = sxx > 0.0 ? sxy / sxx : 0.0;
  rep.bound_holds = true;
  return rep;
}

} // namespace dbf
