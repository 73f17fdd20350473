#pragma once

// Rapid-convergence driver.  Each step builds a recalibration parameter from
// the current calibration by a decreasing ladder of homotopy transforms on
// shrinking sub-balls, applies it, and re-grids onto the next radius.  The
// decay accounting (a_k, b_k), the weight-cap updates, and the initial-radius
// search live here; the algebra is recalibration.hpp, the transforms
// kernels.hpp.

#include <map>
#include <string>
#include <vector>

#include "dbarforge/kernels.hpp"
#include "dbarforge/recalibration.hpp"

namespace dbf {

// Signalled when a step parameter leaves the gauge band; the driver reacts by
// shrinking the initial radius and restarting.
struct RadiusTooLarge : std::runtime_error {
  explicit RadiusTooLarge(const std::string& what) : std::runtime_error(what) {}
};

struct SolverConfig {
  double eps = kGaugeEps;        // invertibility band for the stage gauges
  std::string sigma_schedule = "exp"; // shrink rule hook; only e^{-k-2} is supported
  int k_max = 24;                // iteration cap, also the gate horizon

  // stopping floor: a_k <= max(abs_floor, measured grid defect at a_0 scale)
  double abs_floor = 1e-12;

  // initial-radius search bracket and bisection depth
  double bracket_lo = 1e-13;
  double bracket_hi = 1.0;
  int bisect_iters = 48;

  // bounded retries after a gauge-band violation
  int max_restarts = 3;
  double restart_shrink = 0.7;

  int grid_nodes = 0;            // nodes per axis; 0 picks the dimension default
  int h_max = 4;                 // top stencil order for norms and weight caps

  // gate constants for the radius search only; the iteration never uses them
  bool fit_h = true;             // estimate H by a two-step probe, else fallback
  double h_fallback = 4.0;
  double interior_c_default = 3.0; // used when kernel.interior_c is unset
  double integrability_tol = 1e-6;

  KernelConfig kernel;
  HolderParams holder;

  double sigma_at(int k) const { return std::exp(double(-k - 2)); }
  void validate() const;
};

// One row of the convergence bookkeeping.
struct StepRecord {
  int k = 0;
  double r = 0.0;
  double sigma = 0.0;
  double a = 0.0;                // max over t >= 0 of the stage norms
  double b = 0.0;                // scaled decay quantity at this step
  double S_next = 1.0;
  double R_cap = 0.0;            // derivative cap measured from omega_k
  double L_cap = 0.0;            // derivative cap measured from the gauges
  std::map<StageIndex, double> stage_norm; // every stored row, chain rows included
  double residual_max = 0.0;     // equals a; kept as an explicit CSV column
  double chain_norm = 0.0;       // max over t = -1 rows, 0 when there are none
  double gauge_norm = 0.0;       // max over s of |g_s(k)^{+-1}|
  double seconds = 0.0;
};

struct IterationTrace {
  int m = 0;
  int n = 0;
  double r0 = 0.0;
  double c0 = 0.0;               // chain-row bound of the input calibration
  double floor = 0.0;            // stopping floor the run used
  double h_fit = 0.0;            // gate constant used for the b_k column
  std::vector<StepRecord> steps;
  std::string to_csv() const;
};

// Weight bookkeeping grown one order per step: base magnitudes are fixed by
// the input, the caps are measured from the running iterates.
struct WeightLedger {
  int n = 1;
  int K = 0;
  std::vector<double> A;
  std::vector<double> r_caps;    // +inf where no cap has been measured yet
  std::vector<double> l_caps;
  WeightSequence seq;            // capped sequence, rebuilt after each update
  WeightSequence seq_plain;      // cap-free sequence of the input calibration
};

struct DecayReport {
  bool enough_steps = false;
  std::string note;
  std::vector<double> quad_ratio; // a_{k+1} / (sigma_{m,k}^{-nu(m,k)} a_k^2)
  std::vector<double> step_ratio; // a_{k+1} / a_k
  double h_emp = 0.0;             // max of quad_ratio
  int longest_decreasing_run = 0; // over step_ratio
  bool quad_bounded = false;      // quad_ratio shows no blow-up trend
  bool superlinear = false;       // a decreasing run of length >= 3 exists
  bool chain_bounded = true;      // chain rows stay within 4 c0 at every step
  bool gauge_bounded = true;      // gauge norms stay below 2 at every step
  bool flagged = false;           // decay pattern is not quadratic
};

struct SolveResult {
  bool converged = false;
  std::string status;
  double r0 = 0.0;
  double r_final = 0.0;
  int iterations = 0;
  int restarts = 0;
  RecalParameter<GridForm> eta;  // composed parameter on the final grid
  std::vector<GridForm> gauge;   // g_s = I + eta^{s,0}, one per stage
  Calibration<GridForm> omega_final;
  WeightLedger weights;
  IterationTrace trace;
  double sigma_res = 0.0;        // certification at the returned parameter
  double system_res = 0.0;
};

// Exact limit of the radius schedule relative to r_0: prod (1 - e^{-k-2}).
double limiting_radius_ratio(int terms = 80);

// Chain-row magnitude of the input calibration under its cap-free weights,
// truncated at derivative order h_trunc (the tail is damped by the weights).
double chain_row_bound(const Calibration<PolyForm<cd>>& omega, const WeightSequence& seq,
                       int h_trunc, const HolderParams& hp);

// Base magnitudes and the cap-free weight sequence for one input calibration.
WeightLedger seed_weight_ledger(const Calibration<PolyForm<cd>>& omega,
                                const SolverConfig& cfg);

// One step parameter from the current calibration: decreasing recursion over
// the form degree t = m..0, each stage one homotopy transform onto the next
// sub-radius r_k(1 - l sigma_k/(m+1)).  The result lives on the innermost
// ball B_{r_k(1-sigma_k)}, which is the next step's grid.  Throws
// RadiusTooLarge when a stage gauge leaves the band.
RecalParameter<GridForm> build_step_parameter(const Calibration<GridForm>& omega_k,
                                              double r_k, double sigma_k,
                                              const SolverConfig& cfg);

// Measures the derivative caps of order min(k+1, h_max) from omega_k and the
// running gauges, extends the ledger at index k+1, rebuilds the sequence, and
// re-checks the two weight inequalities from the same measurements.  Returns
// S_{k+1} and fills the cap fields of rec when given.
double update_weights(WeightLedger& led, const Calibration<GridForm>& omega_k,
                      const std::vector<GridForm>& g_fwd,
                      const std::vector<GridForm>& g_inv, int k,
                      const SolverConfig& cfg, StepRecord* rec = nullptr);

// Diagnostics of the initial-radius search.  The smallness bound is logged
// under both exponent conventions in circulation; the gate itself uses
// gate_bound.
struct RadiusSearch {
  double r0 = 0.0;
  double a0 = 0.0;             // h=0 magnitude at the accepted radius
  double h_used = 0.0;         // gate constant, fitted or fallback
  double beta_sum = 0.0;       // partial series value at the accepted radius
  double gate_bound = 0.0;     // smallness bound with the (m+1) s(0) exponent
  double gate_bound_alt = 0.0; // same bound with the quadratic-decay exponent
};

// The series gate threshold, written out once.
inline double beta_gate_threshold() { return 0.5 + 1.0 / (4.0 * std::log(2.0)); }

// Largest radius in the bracket that passes both entry gates: the h=0 smallness
// bound with the interior constant, and the partial beta series staying under
// the threshold above.  Throws when even the lower bracket end fails.
double choose_initial_radius(const Calibration<PolyForm<cd>>& omega,
                             const SolverConfig& cfg, RadiusSearch* out = nullptr);

// Full driver: radius search, iteration with per-step re-gridding, bounded
// restarts on gauge-band violations, certification of the composed parameter.
SolveResult solve(const Calibration<PolyForm<cd>>& omega, const SolverConfig& cfg);

// Decay diagnostics over a finished trace; pure arithmetic, no re-solving.
DecayReport quadratic_decay_report(const IterationTrace& tr);

} // namespace dbf
