#ifndef DBARFORGE_HOLDER_HPP
#define DBARFORGE_HOLDER_HPP

// Weighted Hoelder norms.
//
// For a matrix-valued function f on the closed ball of radius r:
//   |f|_{r,mu} = sup |f(z)| + r^mu sup |f(z)-f(zeta)| / |z-zeta|^mu
// with the operator norm on matrix values.  For a (0,q)-form u and weights S:
//   |u|_{r,h,mu,q} = sum over |I|=q, |alpha| <= h of
//                      S_{|alpha|} r^{|alpha|+q} |d^alpha u_I|_{r,mu}
// where alpha ranges over real-coordinate multi-indices.  The seminorm is
// estimated on a deterministic sample pattern (quasi-random points in the
// ball plus a budgeted pair subset), so computed values are certified lower
// bounds that are reproducible run to run.

#include <utility>
#include <vector>

#include "dbarforge/forms.hpp"

namespace dbf {

// sup |d^k/dx^k exp(1 - 1/(1-x^2))| for k = 0..40, precomputed once.
const std::vector<double>& bump_derivative_table();

struct HolderParams {
  double mu = 0.5;
  int samples_n1 = 2000;
  int samples_n2 = 4000;
  int pair_budget = 30000;
  int sample_count(int n) const { return n <= 1 ? samples_n1 : samples_n2; }
};

// Deterministic sample pattern in the closed unit ball of R^{2n}; scaled by
// the radius at evaluation time so that norms transform exactly under
// dilation.
struct SamplePattern {
  int n = 1;
  std::vector<std::array<double, 2 * kMaxVars>> pts; // unit-ball coordinates
  std::vector<std::pair<int, int>> pairs;
};

const SamplePattern& unit_ball_pattern(int n, int count, int pair_budget);

// Operator 2-norm of a small dense complex matrix (power iteration).
double op_norm(const cd* a, int rows, int cols);

// Seminorm from precomputed point values (point-major, rows*cols per point).
double holder_seminorm_values(const std::vector<cd>& values, int rows, int cols,
                              const SamplePattern& pat, double r, double mu);

// Polynomial-representation seminorm and norm.
double holder_seminorm(const PolyForm<cd>& u, unsigned key, double mu,
                       const HolderParams& hp);
double holder_norm(const PolyForm<cd>& u, int h, double mu,
                   const std::vector<double>& S, const HolderParams& hp);

// ------------------------------------------------------------------ weights

struct WeightSequence {
  // Which clause of the recursion produced each S_k.
  enum Clause { kOne, kBase, kRCap, kLCap, kSubmult, kSeed };
  std::vector<double> S;
  std::vector<int> clause;
  std::vector<double> A, B, D;
  double summability_partial = 0.0;
  bool summable = false;

  double at(int k) const {
    if (k < 0) return 1.0;
    if (size_t(k) < S.size()) return S[size_t(k)];
    return S.back();
  }
};

// Kernel-derivative growth bound used as the floor inside B_k.
double kernel_derivative_bound(int n, int k);

// D_k = 1 / max_{|gamma|=k} max_alpha binom(gamma, alpha), enumerated over
// multi-indices in 2n slots.
double weight_submult_constant(int two_n, int k);

// A_k from the bump table plus per-order magnitudes of the degree (-1) blocks
// (zero-padded when shorter than K+1).
std::vector<double> weight_base_magnitudes(int n, int K,
                                           const std::vector<double>& phi_deriv_sup);

// Recursion S_0 = 1, S_1 = B_1, S_k = min{2^-k B_k, R_k, L_k, D_k min S_j S_{k-j}}.
// Caps are optional per-index (use +inf for "absent"; indices 0..K).
WeightSequence build_weights(int n, int K, const std::vector<double>& A,
                             const std::vector<double>& r_caps = {},
                             const std::vector<double>& l_caps = {});

// Sampled sup of |d^alpha u_I| over all |alpha| = k, maximized over
// components; used to seed A_k and the solver's cap ratios.
double max_deriv_sup(const PolyForm<cd>& u, int k, const HolderParams& hp);

} // namespace dbf

#endif
