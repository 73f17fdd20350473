#ifndef DBARFORGE_BALL_HPP
#define DBARFORGE_BALL_HPP

// Closed-ball domains and multi-index bookkeeping for (0,q)-forms.
// A component index I = {i_1 < ... < i_q} of dzbar_I is stored as a bitmask
// over the n complex directions.

#include <bit>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace dbf {

struct BallDomain {
  int n = 1;      // complex dimension
  double r = 1.0; // radius

  bool operator==(const BallDomain& o) const { return n == o.n && r == o.r; }
};

inline int popcount(unsigned m) { return std::popcount(m); }

// All increasing multi-indices of length q over n directions, as bitmasks in
// increasing numeric order (deterministic component ordering everywhere).
inline std::vector<unsigned> component_keys(int n, int q) {
  std::vector<unsigned> keys;
  for (unsigned m = 0; m < (1u << n); ++m)
    if (popcount(m) == q) keys.push_back(m);
  return keys;
}

// Sign of dzbar_I ^ dzbar_J -> dzbar_{I u J} for disjoint masks: (-1)^{#{(i,j)
// in IxJ : j < i}}.
inline int wedge_sign(unsigned I, unsigned J) {
  int s = 0;
  for (int j = 0; j < 32; ++j) {
    if (!(J >> j & 1u)) continue;
    unsigned above = I >> (j + 1);
    s += popcount(above);
  }
  return (s % 2 == 0) ? 1 : -1;
}

// Sign of dzbar_j ^ dzbar_I -> dzbar_{I u {j}} for j not in I.
inline int insert_sign(int j, unsigned I) {
  unsigned below = I & ((1u << j) - 1u);
  return (popcount(below) % 2 == 0) ? 1 : -1;
}

inline double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * double(n - k + i) / double(i);
  return r;
}

// Compositions of total degree k over d slots (all multi-indices alpha with
// |alpha| = k), used by the weight recursion and norm towers.
inline void enumerate_multi_indices(int d, int k, std::vector<std::vector<int>>& out) {
  std::vector<int> cur(d, 0);
  // iterative odometer
  int pos = 0;
  cur[0] = k;
  while (true) {
    out.push_back(cur);
    // find rightmost slot before last with nonzero to move
    int i = d - 2;
    while (i >= 0 && cur[i] == 0) --i;
    if (i < 0) break;
    --cur[i];
    int rest = 1 + cur[d - 1];
    cur[d - 1] = 0;
    cur[i + 1] = rest;
    (void)pos;
  }
}

} // namespace dbf

#endif
