#include "dbarforge/grid.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

namespace dbf {

GridSpecPtr make_grid(int n, double r, int m) {
  if (n < 1 || n > kMaxVars) throw std::invalid_argument("grid: bad dimension");
  if (!(r > 0.0)) throw std::invalid_argument("grid: radius must be positive");
  if (m == 0) m = (n == 1) ? 33 : 17;
  if (m < 5) throw std::invalid_argument("grid: need at least 5 nodes per axis");
  auto sp = std::make_shared<GridSpec>();
  sp->n = n;
  sp->r = r;
  sp->m = m;
  return sp;
}

std::vector<cd>& GridForm::at(unsigned key) {
  auto it = comp.find(key);
  if (it == comp.end()) {
    auto& v = comp[key];
    v.assign(spec->count() * size_t(pe()), cd(0.0, 0.0));
    return v;
  }
  return it->second;
}

const std::vector<cd>& GridForm::at(unsigned key) const {
  auto it = comp.find(key);
  if (it == comp.end()) throw std::out_of_range("grid component not stored");
  return it->second;
}

cd GridForm::get(unsigned key, size_t pt, int i, int j) const {
  auto it = comp.find(key);
  if (it == comp.end()) return cd(0.0, 0.0);
  return it->second[pt * size_t(pe()) + size_t(i * cols + j)];
}

bool GridForm::is_zero_stored() const {
  for (auto& [k, v] : comp)
    for (auto& x : v)
      if (x != cd(0.0, 0.0)) return false;
  return true;
}

double GridForm::max_abs() const {
  double best = 0.0;
  for (auto& [k, v] : comp)
    for (auto& x : v) best = std::max(best, std::abs(x));
  return best;
}

GridForm grid_zero(GridSpecPtr sp, int q, int rows, int cols) {
  GridForm f(std::move(sp), q, rows, cols);
  for (unsigned key : component_keys(f.spec->n, q)) f.at(key);
  return f;
}

GridForm to_grid(const PolyForm<cd>& u, GridSpecPtr sp) {
  if (u.dom.n != sp->n) throw std::invalid_argument("to_grid: dimension mismatch");
  GridForm f(sp, u.q, u.rows, u.cols);
  size_t cnt = sp->count();
  int pe = f.pe();
  std::array<double, 2 * kMaxVars> x{};
  std::array<cd, kMaxVars> z{};
  for (auto& [key, m] : u.comp) {
    auto& v = f.at(key);
    for (size_t p = 0; p < cnt; ++p) {
      sp->point(p, x);
      for (int j = 0; j < sp->n; ++j)
        z[size_t(j)] = cd(x[size_t(2 * j)], x[size_t(2 * j + 1)]);
      for (int t = 0; t < pe; ++t) v[p * size_t(pe) + size_t(t)] = m.e[size_t(t)].eval(z);
    }
  }
  return f;
}

GridForm grid_from_fn(
    GridSpecPtr sp, int q, int rows, int cols,
    const std::function<void(const std::array<double, 2 * kMaxVars>&, unsigned,
                             cd*)>& fn) {
  GridForm f(sp, q, rows, cols);
  size_t cnt = sp->count();
  int pe = rows * cols;
  std::array<double, 2 * kMaxVars> x{};
  for (unsigned key : component_keys(sp->n, q)) {
    auto& v = f.at(key);
    for (size_t p = 0; p < cnt; ++p) {
      sp->point(p, x);
      fn(x, key, v.data() + p * size_t(pe));
    }
  }
  return f;
}

void check_same_grid(const GridForm& u, const GridForm& v) {
  const GridSpec& a = *u.spec;
  const GridSpec& b = *v.spec;
  if (a.n != b.n || a.m != b.m || a.r != b.r)
    throw std::invalid_argument("grid operands live on different grids");
}

namespace {

GridForm combine(const GridForm& u, const GridForm& v, double sv) {
  check_same_grid(u, v);
  if (u.q != v.q || u.rows != v.rows || u.cols != v.cols)
    throw std::invalid_argument("grid operands have different shapes");
  GridForm r(u.spec, u.q, u.rows, u.cols);
  for (auto& [key, val] : u.comp) r.comp[key] = val;
  for (auto& [key, val] : v.comp) {
    auto& dst = r.at(key);
    for (size_t i = 0; i < val.size(); ++i) dst[i] += sv * val[i];
  }
  return r;
}

} // namespace

GridForm add(const GridForm& u, const GridForm& v) { return combine(u, v, 1.0); }
GridForm sub(const GridForm& u, const GridForm& v) { return combine(u, v, -1.0); }

GridForm neg(const GridForm& u) { return scale(u, cd(-1.0, 0.0)); }

GridForm scale(const GridForm& u, cd a) {
  GridForm r(u.spec, u.q, u.rows, u.cols);
  for (auto& [key, val] : u.comp) {
    auto& dst = r.comp[key];
    dst.resize(val.size());
    for (size_t i = 0; i < val.size(); ++i) dst[i] = a * val[i];
  }
  return r;
}

GridForm wedge(const GridForm& u, const GridForm& v) {
  check_same_grid(u, v);
  if (u.cols != v.rows)
    throw std::invalid_argument("wedge: matrix shapes are not composable");
  int n = u.spec->n;
  GridForm r(u.spec, u.q + v.q, u.rows, v.cols);
  if (r.q > n) return r;
  size_t cnt = u.spec->count();
  for (auto& [ki, mu] : u.comp) {
    if (ki >> n) throw std::invalid_argument("wedge: bad component key");
    for (auto& [kj, mv] : v.comp) {
      if (ki & kj) continue;
      double sg = wedge_sign(ki, kj);
      auto& dst = r.at(ki | kj);
      for (size_t p = 0; p < cnt; ++p) {
        const cd* a = mu.data() + p * size_t(u.pe());
        const cd* b = mv.data() + p * size_t(v.pe());
        cd* c = dst.data() + p * size_t(r.pe());
        for (int i = 0; i < u.rows; ++i)
          for (int j = 0; j < v.cols; ++j) {
            cd acc(0.0, 0.0);
            for (int k = 0; k < u.cols; ++k)
              acc += a[i * u.cols + k] * b[k * v.cols + j];
            c[i * v.cols + j] += sg * acc;
          }
      }
    }
  }
  return r;
}

GridForm identity_plus(const GridForm& u) {
  if (u.q != 0 || u.rows != u.cols)
    throw std::invalid_argument("identity_plus needs a square 0-form");
  GridForm r = u;
  auto& v = r.at(0u);
  size_t cnt = u.spec->count();
  for (size_t p = 0; p < cnt; ++p)
    for (int i = 0; i < u.rows; ++i) v[p * size_t(u.pe()) + size_t(i * u.cols + i)] += 1.0;
  return r;
}

GridForm gauge_inverse_of_identity_plus(const GridForm& theta) {
  if (theta.q != 0 || theta.rows != theta.cols)
    throw std::invalid_argument("gauge inverse needs a square 0-form");
  int p = theta.rows;
  int pe = theta.pe();
  GridForm out(theta.spec, 0, p, p);
  auto& dst = out.at(0u);
  auto sit = theta.comp.find(0u);
  const std::vector<cd>* src = sit == theta.comp.end() ? nullptr : &sit->second;
  size_t cnt = theta.spec->count();
  std::vector<cd> a(size_t(p) * size_t(p)), inv(size_t(p) * size_t(p));
  std::array<double, 2 * kMaxVars> x{};
  for (size_t node = 0; node < cnt; ++node) {
    theta.spec->point(node, x);
    if (!theta.spec->in_ball(x)) continue;
    const cd* blk = src ? src->data() + node * size_t(pe) : nullptr;
    for (int i = 0; i < p; ++i)
      for (int j = 0; j < p; ++j)
        a[size_t(i * p + j)] = (blk ? blk[i * p + j] : cd(0.0, 0.0)) + (i == j ? 1.0 : 0.0);
    for (int i = 0; i < p; ++i)
      for (int j = 0; j < p; ++j) inv[size_t(i * p + j)] = i == j ? 1.0 : 0.0;
    // Gauss-Jordan with partial pivoting
    for (int c = 0; c < p; ++c) {
      int piv = c;
      for (int i = c + 1; i < p; ++i)
        if (std::abs(a[size_t(i * p + c)]) > std::abs(a[size_t(piv * p + c)])) piv = i;
      if (std::abs(a[size_t(piv * p + c)]) < 1e-14)
        throw std::runtime_error("gauge matrix is singular at a grid node");
      if (piv != c)
        for (int j = 0; j < p; ++j) {
          std::swap(a[size_t(c * p + j)], a[size_t(piv * p + j)]);
          std::swap(inv[size_t(c * p + j)], inv[size_t(piv * p + j)]);
        }
      cd d = a[size_t(c * p + c)];
      for (int j = 0; j < p; ++j) {
        a[size_t(c * p + j)] /= d;
        inv[size_t(c * p + j)] /= d;
      }
      for (int i = 0; i < p; ++i) {
        if (i == c) continue;
        cd f = a[size_t(i * p + c)];
        if (f == cd(0, 0)) continue;
        for (int j = 0; j < p; ++j) {
          a[size_t(i * p + j)] -= f * a[size_t(c * p + j)];
          inv[size_t(i * p + j)] -= f * inv[size_t(c * p + j)];
        }
      }
    }
    cd* ob = dst.data() + node * size_t(pe);
    for (int t = 0; t < pe; ++t) ob[t] = inv[size_t(t)];
  }
  extend_smooth(out);
  return out;
}

namespace {

// 5-point first-derivative stencils, 4th order, offsets relative to the node
struct Stencil {
  int off[5];
  double w[5];
};

const Stencil kCentered = {{-2, -1, 0, 1, 2}, {1, -8, 0, 8, -1}};
const Stencil kEdge0 = {{0, 1, 2, 3, 4}, {-25, 48, -36, 16, -3}};
const Stencil kEdge1 = {{-1, 0, 1, 2, 3}, {-3, -10, 18, -6, 1}};
const Stencil kEdgeM2 = {{-3, -2, -1, 0, 1}, {-1, 6, -18, 10, 3}};
const Stencil kEdgeM1 = {{-4, -3, -2, -1, 0}, {3, -16, 36, -48, 25}};

const Stencil& stencil_for(int i, int m) {
  if (i == 0) return kEdge0;
  if (i == 1) return kEdge1;
  if (i == m - 2) return kEdgeM2;
  if (i == m - 1) return kEdgeM1;
  return kCentered;
}

// d/dx_axis of one point-major component array
std::vector<cd> deriv_values(const GridSpec& g, int pe, const std::vector<cd>& v,
                             int axis) {
  std::vector<cd> out(v.size());
  size_t s = g.stride(axis) * size_t(pe);
  size_t cnt = g.count();
  double inv = 1.0 / (12.0 * g.step());
  size_t sa = g.stride(axis);
  for (size_t p = 0; p < cnt; ++p) {
    int i = int((p / sa) % size_t(g.m));
    const Stencil& st = stencil_for(i, g.m);
    size_t base = p * size_t(pe);
    for (int t = 0; t < pe; ++t) {
      cd acc(0.0, 0.0);
      for (int k = 0; k < 5; ++k)
        acc += st.w[k] * v[base + size_t(ptrdiff_t(s) * st.off[k]) + size_t(t)];
      out[base + size_t(t)] = acc * inv;
    }
  }
  return out;
}

} // namespace

GridForm deriv_axis(const GridForm& u, int axis) {
  if (axis < 0 || axis >= u.spec->d())
    throw std::invalid_argument("deriv_axis: axis out of range");
  GridForm r(u.spec, u.q, u.rows, u.cols);
  for (auto& [key, v] : u.comp)
    r.comp[key] = deriv_values(*u.spec, u.pe(), v, axis);
  return r;
}

GridForm dbar_grid(const GridForm& u) {
  const GridSpec& g = *u.spec;
  GridForm r(u.spec, u.q + 1, u.rows, u.cols);
  if (r.q > g.n) return r;
  for (auto& [key, v] : u.comp) {
    for (int j = 0; j < g.n; ++j) {
      if (key & (1u << j)) continue;
      auto ddx = deriv_values(g, u.pe(), v, 2 * j);
      auto ddy = deriv_values(g, u.pe(), v, 2 * j + 1);
      double sg = insert_sign(j, key);
      auto& dst = r.at(key | (1u << j));
      for (size_t i = 0; i < ddx.size(); ++i)
        dst[i] += sg * 0.5 * (ddx[i] + cd(0.0, 1.0) * ddy[i]);
    }
  }
  return r;
}

void extend_smooth(GridForm& u) {
  const GridSpec& g = *u.spec;
  size_t cnt = g.count();
  int d = g.d();
  int pe = u.pe();
  // 0 = unfilled, 1 = coarse fill, 2 = accurate fill or in-ball data
  std::vector<char> st(cnt, 0);
  std::array<double, 2 * kMaxVars> x{};
  for (size_t p = 0; p < cnt; ++p) {
    g.point(p, x);
    st[p] = g.in_ball(x) ? 2 : 0;
  }

  // writes the value extrapolated from `avail` consecutive nodes ending one
  // step before `node` (step may be negative via wraparound)
  auto extrapolate = [&](std::vector<cd>& v, size_t node, size_t step_, int avail) {
    switch (avail >= 4 ? 4 : avail) {
      case 4:
        v[node] = 4.0 * v[node - step_] - 6.0 * v[node - 2 * step_] +
                  4.0 * v[node - 3 * step_] - v[node - 4 * step_];
        break;
      case 3:
        v[node] = 3.0 * v[node - step_] - 3.0 * v[node - 2 * step_] + v[node - 3 * step_];
        break;
      case 2:
        v[node] = 2.0 * v[node - step_] - v[node - 2 * step_];
        break;
      default:
        v[node] = v[node - step_];
    }
  };

  // Phase 1: grow an accurate crust one ring per sweep. A node is filled only
  // from a run of at least 3 accurate neighbors along some axis, so quadratic
  // data is continued exactly; whichever axis offers a good run fills it.
  for (int sweep = 0; sweep < 5; ++sweep) {
    std::vector<std::pair<size_t, std::pair<size_t, int>>> fills;
    for (int a = 0; a < d; ++a) {
      size_t sa = g.stride(a);
      for (size_t base = 0; base < cnt; ++base) {
        if ((base / sa) % size_t(g.m) != 0) continue;
        int run = 0;
        for (int i = 0; i < g.m; ++i) {
          size_t p = base + size_t(i) * sa;
          if (st[p] == 2) {
            ++run;
            continue;
          }
          if (run >= 3 && st[p] == 0)
            fills.push_back({p, {sa, std::min(run, 4)}});
          run = 0;
        }
        run = 0;
        for (int i = g.m - 1; i >= 0; --i) {
          size_t p = base + size_t(i) * sa;
          if (st[p] == 2) {
            ++run;
            continue;
          }
          if (run >= 3 && st[p] == 0)
            fills.push_back({p, {size_t(-ptrdiff_t(sa)), std::min(run, 4)}});
          run = 0;
        }
      }
    }
    if (fills.empty()) break;
    for (auto& [p, how] : fills) {
      if (st[p] == 2) continue; // an earlier fill this sweep got there first
      for (auto& [key, v] : u.comp)
        for (int t = 0; t < pe; ++t)
          extrapolate(v, p * size_t(pe) + size_t(t), how.first * size_t(pe),
                      how.second);
      st[p] = 2;
    }
  }

  // Phase 2: one cascade pass per axis fills whatever is left (far corners),
  // depth-limited and then held constant; never overwrites phase-1 data.
  // Phase 1 can leave isolated filled islands inside a row, so track the
  // consecutive-filled streak instead of assuming a single segment.
  for (int a = 0; a < d; ++a) {
    size_t sa = g.stride(a);
    size_t vs = sa * size_t(pe);
    for (size_t base = 0; base < cnt; ++base) {
      if ((base / sa) % size_t(g.m) != 0) continue;
      int lo = -1;
      for (int i = 0; i < g.m && lo < 0; ++i)
        if (st[base + size_t(i) * sa]) lo = i;
      if (lo < 0) continue;

      int run = 1, last_real = lo;
      for (int i = lo + 1; i < g.m; ++i) {
        size_t p = base + size_t(i) * sa;
        if (st[p]) {
          ++run;
          last_real = i;
          continue;
        }
        for (auto& [key, v] : u.comp) {
          size_t node = base * size_t(pe) + size_t(i) * vs;
          for (int t = 0; t < pe; ++t) {
            if (i - last_real <= 3)
              extrapolate(v, node + size_t(t), vs, std::min(run, 4));
            else
              v[node + size_t(t)] = v[node - vs + size_t(t)];
          }
        }
        st[p] = 1;
        ++run;
      }

      run = 0;
      for (int j = lo; j < g.m && st[base + size_t(j) * sa]; ++j) ++run;
      for (int i = lo - 1; i >= 0; --i) {
        size_t p = base + size_t(i) * sa;
        for (auto& [key, v] : u.comp) {
          size_t node = base * size_t(pe) + size_t(i) * vs;
          for (int t = 0; t < pe; ++t) {
            if (lo - i <= 3)
              extrapolate(v, node + size_t(t), size_t(-ptrdiff_t(vs)),
                          std::min(run, 4));
            else
              v[node + size_t(t)] = v[node + vs + size_t(t)];
          }
        }
        st[p] = 1;
        ++run;
      }
    }
  }
}

namespace {

// cubic tensor stencil shared across components evaluated at one point
struct InterpStencil {
  size_t flat[256];
  double wt[256];
  int count = 0;
};

void build_stencil(const GridSpec& g, const double* x, InterpStencil& s) {
  int d = g.d();
  double w[2 * kMaxVars][4];
  size_t off[2 * kMaxVars][4];
  double h = g.step();
  for (int a = 0; a < d; ++a) {
    double xi = (x[a] + g.r) / h;
    if (xi < 0.0) xi = 0.0;
    if (xi > double(g.m - 1)) xi = double(g.m - 1);
    int b = int(std::floor(xi)) - 1;
    if (b < 0) b = 0;
    if (b > g.m - 4) b = g.m - 4;
    double t = xi - b;
    w[a][0] = -(t - 1.0) * (t - 2.0) * (t - 3.0) / 6.0;
    w[a][1] = t * (t - 2.0) * (t - 3.0) / 2.0;
    w[a][2] = -t * (t - 1.0) * (t - 3.0) / 2.0;
    w[a][3] = t * (t - 1.0) * (t - 2.0) / 6.0;
    for (int dig = 0; dig < 4; ++dig)
      off[a][dig] = size_t(b + dig) * g.stride(a);
  }
  int c = 0;
  if (d == 2) {
    for (int i0 = 0; i0 < 4; ++i0) {
      if (w[0][i0] == 0.0) continue;
      for (int i1 = 0; i1 < 4; ++i1) {
        if (w[1][i1] == 0.0) continue;
        s.flat[c] = off[0][i0] + off[1][i1];
        s.wt[c] = w[0][i0] * w[1][i1];
        ++c;
      }
    }
  } else if (d == 4) {
    for (int i0 = 0; i0 < 4; ++i0) {
      if (w[0][i0] == 0.0) continue;
      for (int i1 = 0; i1 < 4; ++i1) {
        double w01 = w[0][i0] * w[1][i1];
        if (w01 == 0.0) continue;
        size_t f01 = off[0][i0] + off[1][i1];
        for (int i2 = 0; i2 < 4; ++i2) {
          double w02 = w01 * w[2][i2];
          if (w02 == 0.0) continue;
          size_t f02 = f01 + off[2][i2];
          for (int i3 = 0; i3 < 4; ++i3) {
            if (w[3][i3] == 0.0) continue;
            s.flat[c] = f02 + off[3][i3];
            s.wt[c] = w02 * w[3][i3];
            ++c;
          }
        }
      }
    }
  } else {
    int combos = 1;
    for (int a = 0; a < d; ++a) combos *= 4;
    for (int cc0 = 0; cc0 < combos; ++cc0) {
      int cc = cc0;
      double wt = 1.0;
      size_t flat = 0;
      for (int a = 0; a < d; ++a) {
        wt *= w[a][cc & 3];
        flat += off[a][cc & 3];
        cc >>= 2;
      }
      if (wt == 0.0) continue;
      s.flat[c] = flat;
      s.wt[c] = wt;
      ++c;
    }
  }
  s.count = c;
}

} // namespace

void eval_component(const GridForm& u, unsigned key, const double* x, cd* out) {
  eval_components(u, &key, 1, x, out);
}

void eval_components(const GridForm& u, const unsigned* keys, int nkeys,
                     const double* x, cd* out) {
  int pe = u.pe();
  InterpStencil s;
  bool built = false;
  for (int k = 0; k < nkeys; ++k) {
    cd* ok = out + size_t(k) * size_t(pe);
    auto it = u.comp.find(keys[k]);
    if (it == u.comp.end()) {
      for (int t = 0; t < pe; ++t) ok[t] = cd(0.0, 0.0);
      continue;
    }
    if (!built) {
      build_stencil(*u.spec, x, s);
      built = true;
    }
    const std::vector<cd>& v = it->second;
    for (int t = 0; t < pe; ++t) ok[t] = cd(0.0, 0.0);
    for (int c = 0; c < s.count; ++c) {
      double wt = s.wt[c];
      const cd* blk = v.data() + s.flat[c] * size_t(pe);
      for (int t = 0; t < pe; ++t) ok[t] += wt * blk[t];
    }
  }
}

ComponentSampler::ComponentSampler(const GridForm& u, std::vector<unsigned> keys)
    : u_(&u), pe_(u.pe()) {
  vecs_.reserve(keys.size());
  for (unsigned key : keys) {
    auto it = u.comp.find(key);
    vecs_.push_back(it == u.comp.end() ? nullptr : &it->second);
  }
}

void ComponentSampler::operator()(const double* x, cd* out) const {
  InterpStencil s;
  build_stencil(*u_->spec, x, s);
  for (size_t k = 0; k < vecs_.size(); ++k) {
    cd* ok = out + k * size_t(pe_);
    for (int t = 0; t < pe_; ++t) ok[t] = cd(0.0, 0.0);
    if (!vecs_[k]) continue;
    const cd* v = vecs_[k]->data();
    for (int c = 0; c < s.count; ++c) {
      double wt = s.wt[c];
      const cd* blk = v + s.flat[c] * size_t(pe_);
      for (int t = 0; t < pe_; ++t) ok[t] += wt * blk[t];
    }
  }
}

GridForm resample(const GridForm& u, GridSpecPtr target) {
  if (target->n != u.spec->n)
    throw std::invalid_argument("resample: dimension mismatch");
  if (target->r > u.spec->r * (1.0 + 1e-12))
    throw std::invalid_argument("resample target must lie inside the source cube");
  GridForm r(target, u.q, u.rows, u.cols);
  size_t cnt = target->count();
  int pe = u.pe();
  std::array<double, 2 * kMaxVars> x{};
  for (auto& [key, v] : u.comp) {
    (void)v;
    auto& dst = r.at(key);
    for (size_t p = 0; p < cnt; ++p) {
      target->point(p, x);
      eval_component(u, key, x.data(), dst.data() + p * size_t(pe));
    }
  }
  return r;
}

GridForm grid_restrict(const GridForm& u, double r_new) {
  if (r_new > u.spec->r * (1.0 + 1e-12))
    throw std::invalid_argument("grid restriction cannot grow the domain");
  return resample(u, make_grid(u.spec->n, r_new, u.spec->m));
}

// ------------------------------------------------------- grid-side norms

namespace {

// derivative grids for all multi-orders up to level h, built level by level
struct DerivLattice {
  std::map<std::vector<int>, GridForm> g;

  DerivLattice(const GridForm& u, int h) {
    int d = u.spec->d();
    g.emplace(std::vector<int>(size_t(d), 0), u);
    for (int k = 1; k <= h; ++k) {
      std::vector<std::vector<int>> alphas;
      enumerate_multi_indices(d, k, alphas);
      for (auto& alpha : alphas) {
        int axis = 0;
        while (alpha[size_t(axis)] == 0) ++axis;
        std::vector<int> parent = alpha;
        parent[size_t(axis)] -= 1;
        g.emplace(alpha, deriv_axis(g.at(parent), axis));
      }
    }
  }
};

std::vector<cd> pattern_values(const GridForm& u, unsigned key, double r_norm,
                               const SamplePattern& pat) {
  int pe = u.pe();
  std::vector<cd> vals(pat.pts.size() * size_t(pe));
  double x[2 * kMaxVars];
  for (size_t p = 0; p < pat.pts.size(); ++p) {
    for (int a = 0; a < u.spec->d(); ++a) x[a] = pat.pts[p][size_t(a)] * r_norm;
    eval_component(u, key, x, vals.data() + p * size_t(pe));
  }
  return vals;
}

} // namespace

double grid_holder_seminorm(const GridForm& u, unsigned key, double r_norm,
                            double mu, const HolderParams& hp) {
  const SamplePattern& pat =
      unit_ball_pattern(u.spec->n, hp.sample_count(u.spec->n), hp.pair_budget);
  if (!u.has(key)) return 0.0;
  auto vals = pattern_values(u, key, r_norm, pat);
  return holder_seminorm_values(vals, u.rows, u.cols, pat, r_norm, mu);
}

double grid_holder_norm(const GridForm& u, double r_norm, int h, double mu,
                        const std::vector<double>& S, const HolderParams& hp) {
  if (r_norm > u.spec->r * (1.0 + 1e-12))
    throw std::invalid_argument("norm radius exceeds the grid domain");
  if (h > 4) h = 4; // stencil accuracy limit
  const SamplePattern& pat =
      unit_ball_pattern(u.spec->n, hp.sample_count(u.spec->n), hp.pair_budget);
  DerivLattice lat(u, h);
  double rq = std::pow(r_norm, u.q);
  double total = 0.0;
  for (auto& [alpha, du] : lat.g) {
    int k = 0;
    for (int a : alpha) k += a;
    double Sk = size_t(k) < S.size() ? S[size_t(k)] : S.back();
    if (Sk == 0.0) continue;
    for (auto& [key, v] : du.comp) {
      (void)v;
      auto vals = pattern_values(du, key, r_norm, pat);
      double semi = holder_seminorm_values(vals, u.rows, u.cols, pat, r_norm, mu);
      total += Sk * std::pow(r_norm, k) * rq * semi;
    }
  }
  return total;
}

double grid_max_deriv_sup(const GridForm& u, double r_norm, int k,
                          const HolderParams& hp) {
  if (k > 4) k = 4;
  const SamplePattern& pat =
      unit_ball_pattern(u.spec->n, hp.sample_count(u.spec->n), hp.pair_budget);
  DerivLattice lat(u, k);
  double best = 0.0;
  for (auto& [alpha, du] : lat.g) {
    int kk = 0;
    for (int a : alpha) kk += a;
    if (kk != k) continue;
    for (auto& [key, v] : du.comp) {
      (void)v;
      auto vals = pattern_values(du, key, r_norm, pat);
      best = std::max(best,
                      holder_seminorm_values(vals, u.rows, u.cols, pat, r_norm, hp.mu));
    }
  }
  return best;
}

} // namespace dbf
