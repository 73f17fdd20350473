#pragma once

// Grid-side representation of matrix-valued (0,q)-forms: values sampled on a
// uniform tensor grid over the bounding cube of a ball, with the nodes outside
// the ball filled by smooth extrapolation so that interpolation patches near
// the sphere never touch unset data.

#include <array>
#include <functional>
#include <map>
#include <memory>
#include <vector>

#include "dbarforge/forms.hpp"
#include "dbarforge/holder.hpp"

namespace dbf {

struct GridSpec {
  int n = 1;       // complex dimension; the grid spans 2n real axes
  double r = 1.0;  // ball radius; nodes fill the cube [-r, r]^{2n}
  int m = 33;      // nodes per axis, at least 5

  int d() const { return 2 * n; }
  double step() const { return 2.0 * r / (m - 1); }
  double coord(int i) const { return -r + step() * i; }
  size_t stride(int axis) const {
    size_t s = 1;
    for (int a = 0; a < axis; ++a) s *= size_t(m);
    return s;
  }
  size_t count() const { return stride(d()); }
  void unflatten(size_t flat, std::array<int, 2 * kMaxVars>& idx) const {
    for (int a = 0; a < d(); ++a) {
      idx[size_t(a)] = int(flat % size_t(m));
      flat /= size_t(m);
    }
  }
  void point(size_t flat, std::array<double, 2 * kMaxVars>& x) const {
    for (int a = 0; a < d(); ++a) {
      x[size_t(a)] = coord(int(flat % size_t(m)));
      flat /= size_t(m);
    }
  }
  bool in_ball(const std::array<double, 2 * kMaxVars>& x) const {
    double s = 0.0;
    for (int a = 0; a < d(); ++a) s += x[size_t(a)] * x[size_t(a)];
    return s <= r * r * (1.0 + 1e-12);
  }
};

using GridSpecPtr = std::shared_ptr<const GridSpec>;

// m = 0 picks the default node count for the dimension.
GridSpecPtr make_grid(int n, double r, int m = 0);

struct GridForm {
  GridSpecPtr spec;
  int q = 0;
  int rows = 1, cols = 1;
  // point-major: comp[key][pt * rows*cols + entry], one entry per cube node
  std::map<unsigned, std::vector<cd>> comp;

  GridForm() = default;
  GridForm(GridSpecPtr sp, int q_, int rows_, int cols_)
      : spec(std::move(sp)), q(q_), rows(rows_), cols(cols_) {}

  int pe() const { return rows * cols; }
  bool has(unsigned key) const { return comp.count(key) != 0; }
  std::vector<cd>& at(unsigned key);
  const std::vector<cd>& at(unsigned key) const;
  // missing components read as zero
  cd get(unsigned key, size_t pt, int i, int j) const;
  bool is_zero_stored() const;
  double max_abs() const;
};

GridForm grid_zero(GridSpecPtr sp, int q, int rows, int cols);

// Samples every cube node; polynomials are evaluable anywhere, so the cube is
// filled exactly and no extension pass is needed.
GridForm to_grid(const PolyForm<cd>& u, GridSpecPtr sp);

// fn(x, key, out) writes the rows*cols matrix of component `key` at point x.
GridForm grid_from_fn(
    GridSpecPtr sp, int q, int rows, int cols,
    const std::function<void(const std::array<double, 2 * kMaxVars>&, unsigned,
                             cd*)>& fn);

void check_same_grid(const GridForm& u, const GridForm& v);
GridForm add(const GridForm& u, const GridForm& v);
GridForm sub(const GridForm& u, const GridForm& v);
GridForm neg(const GridForm& u);
GridForm scale(const GridForm& u, cd a);
GridForm wedge(const GridForm& u, const GridForm& v);
GridForm identity_plus(const GridForm& u);
// pointwise inverse of I + theta for a square 0-form; in-ball nodes are
// inverted directly and the crust is rebuilt by extension
GridForm gauge_inverse_of_identity_plus(const GridForm& theta);

// componentwise d/dx_axis by 5-point stencils, one-sided at the cube faces
GridForm deriv_axis(const GridForm& u, int axis);
GridForm dbar_grid(const GridForm& u);
inline GridForm dbar(const GridForm& u) { return dbar_grid(u); }

// Overwrites the nodes outside the ball by cascaded 1-D extrapolation from the
// in-ball data (depth-limited, then held constant). Call after any construction
// that can only evaluate inside the ball.
void extend_smooth(GridForm& u);

// cubic tensor-product interpolation; out receives rows*cols entries
void eval_component(const GridForm& u, unsigned key, const double* x, cd* out);
// same, for several components at one point with a shared stencil; out is
// laid out [key * pe() + entry]
void eval_components(const GridForm& u, const unsigned* keys, int nkeys,
                     const double* x, cd* out);

// component set resolved once for repeated evaluation; keys absent from the
// form read as zero
class ComponentSampler {
 public:
  ComponentSampler(const GridForm& u, std::vector<unsigned> keys);
  void operator()(const double* x, cd* out) const; // out[k * pe + entry]

 private:
  const GridForm* u_;
  std::vector<const std::vector<cd>*> vecs_;
  int pe_;
};

// target cube must sit inside the source cube
GridForm resample(const GridForm& u, GridSpecPtr target);
GridForm grid_restrict(const GridForm& u, double r_new);

// Same sample pattern and weighting as the PolyRep norm; derivatives come from
// stencil grids, values at pattern points from interpolation. h is capped at 4.
double grid_holder_seminorm(const GridForm& u, unsigned key, double r_norm,
                            double mu, const HolderParams& hp);
double grid_holder_norm(const GridForm& u, double r_norm, int h, double mu,
                        const std::vector<double>& S, const HolderParams& hp);
double grid_max_deriv_sup(const GridForm& u, double r_norm, int k,
                          const HolderParams& hp);

} // namespace dbf
