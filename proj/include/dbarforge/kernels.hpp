#pragma once

// Integral homotopy operator for dbar on balls: the volume (Bochner-Martinelli
// type) transform plus the sphere (Leray) correction, with quadrature in polar
// coordinates around each output point so the kernel singularity is absorbed
// into the volume element.

#include <map>
#include <vector>

#include "dbarforge/grid.hpp"

namespace dbf {

struct KernelConfig {
  // volume rule: Gauss nodes along each ray from the output point, times the
  // angular rule (trapezoid circle for n=1, product sphere rule for n=2)
  int vol_rad = 10;
  int vol_ang = 48; // n=1 circle nodes
  int s3_alpha = 6; // n=2: Gauss nodes in the polar angle
  int s3_ang = 8;   // n=2: trapezoid nodes for each periodic angle
  // boundary sphere rule (n=2 only)
  int bnd_alpha = 10;
  int bnd_ang = 12;
  // subtract the value at the singular point before integrating (n=1 volume)
  bool subtract_singularity = false;
  // fitted constant of the interior estimate, filled by fit_interior_constant
  double interior_c = 0.0;

  int s_law(int n, int h) const { return 2 * n + h + 2; }
  // refinement helper: scales every node count by f (rounded, floor 2)
  KernelConfig scaled(double f) const;
};

// Volume part: degree q+1 on B_r in, degree q on B_{r_out} out, r_out < r.
// The output grid reuses the input node count per axis.
GridForm bm_volume_transform(const GridForm& u, double r_out,
                             const KernelConfig& cfg = {});
GridForm bm_volume_transform(const PolyForm<cd>& u, double r_out, int m_out = 0,
                             const KernelConfig& cfg = {});

// Sphere part; identically zero for n = 1 (empty kernel family) and for
// output degree >= 1 (the Leray section is holomorphic in z).
GridForm boundary_transform(const GridForm& u, double r_out,
                            const KernelConfig& cfg = {});
GridForm boundary_transform(const PolyForm<cd>& u, double r_out, int m_out = 0,
                            const KernelConfig& cfg = {});

// The homotopy operator T: volume plus boundary, output on B_{r(1-sigma)}.
GridForm leray_koppelman(const GridForm& u, double sigma,
                         const KernelConfig& cfg = {});
GridForm leray_koppelman(const PolyForm<cd>& u, double sigma, int m_out = 0,
                         const KernelConfig& cfg = {});

// Holder norm (h=0) of u - dbar(T u) - T(dbar u) on the shrunk ball.
double homotopy_residual(const GridForm& u, double sigma,
                         const KernelConfig& cfg = {},
                         const HolderParams& hp = {});

struct InteriorFitReport {
  double c_lsq = 0.0;             // least-squares constant over all samples
  double c_max = 0.0;             // max observed ratio (the certified bound)
  std::map<int, double> per_h_max; // max ratio per derivative order
  bool bound_holds = false;       // c_max covers every sample by construction
};

// Ratios ||T u||_{r(1-sigma), h+1} / (sigma^{-s(h)} ||u||_{r, h}) over the
// sample and parameter sets.
InteriorFitReport fit_interior_constant(const std::vector<GridForm>& samples,
                                        const std::vector<int>& hs,
                                        const std::vector<double>& sigmas,
                                        const std::vector<double>& S,
                                        const KernelConfig& cfg = {},
                                        const HolderParams& hp = {});

} // namespace dbf
