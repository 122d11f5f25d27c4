// Optimal-control computation: grid transcription solved to optimality, a
// single-switch policy search, the costate certificate, and switch counting
// with a chattering filter.
#pragma once

#include <vector>

#include "reflux/dynamics.hpp"
#include "reflux/lp.hpp"
#include "reflux/params.hpp"
#include "reflux/state.hpp"

namespace reflux {

struct SolveConfig {
  /// Horizon T; <= 0 selects the automatic horizon: twice the worst-case
  /// sequential drain time 2 sum_i (q_i^p + q_i^r) / ((1 - r_i) mu).  Past
  /// full drain the cost integrand is zero, so any longer horizon leaves the
  /// optimum unchanged.
  double horizon = 0.0;
  int grid_points = 2000;
  double lp_tolerance = 1e-8;  // relative optimality gap the solve must beat

  static double auto_horizon(const Params& p, const State& q0);
  double resolved_horizon(const Params& p, const State& q0) const;
};

struct OptimalSolution {
  Params params;
  std::vector<double> node_times;
  std::vector<Allocation> controls;  // per grid cell
  Trajectory trajectory;             // exact propagation of those controls
  double cost = 0.0;                 // optimal objective (authoritative)
  int switch_count = 0;
  // solve diagnostics
  double duality_gap = 0.0;
  int ipm_iterations = 0;
  double min_intracell_dip = 0.0;
  int refinement_rounds = 0;
};

/// Dense control-space transcription on a uniform grid (see lp.hpp).
LpInstance transcribe_lp(const Params& p, const State& q0,
                         const SolveConfig& config);

/// Solve the transcription to optimality.  State nonnegativity is enforced at
/// grid nodes; a post-check locates intra-cell dips of the primary queues in
/// closed form and locally refines the grid when any dip exceeds 1e-6.
OptimalSolution solve_optimal(const Params& p, const State& q0,
                              const SolveConfig& config);

/// Wrap explicit per-cell controls as an OptimalSolution (for switch counting
/// and diagnostics of hand-built control paths).
OptimalSolution solution_from_controls(const Params& p, const State& q0,
                                       std::vector<double> node_times,
                                       std::vector<Allocation> controls);

struct SingleSwitchResult {
  JobClass first = JobClass::class1;  // class prioritized before the switch
  double t_switch = 0.0;
  double cost = 0.0;
  JobClass initial_priority = JobClass::class1;  // effective start priority
  double fp1_cost = 0.0;
  double fp2_cost = 0.0;
};

/// Best policy of the form "prioritize one class, switch once at time t":
/// coarse grid plus golden-section refinement over t in [0, T], for both
/// orderings; returns the better.
SingleSwitchResult best_single_switch(const Params& p, const State& q0,
                                      const SolveConfig& config);

/// Closed-form costates of the minimum-principle formulation; the control
/// coefficient in the Hamiltonian reproduces the cumulative kernel K_i(T-t).
class PontryaginCertificate {
 public:
  PontryaginCertificate(const Params& p, double horizon);

  double horizon() const { return horizon_; }
  double costate_p(double t) const;                 // T - t (class independent)
  double costate_r(JobClass cls, double t) const;   // T-t - (1-e^{-g(T-t)})/g
  double hamiltonian_u_coefficient(JobClass cls, double t) const;

 private:
  Params params_;
  double horizon_;
};

PontryaginCertificate pontryagin_certificate(const Params& p,
                                             const SolveConfig& config);

/// Number of genuine priority switches along the solution's control path:
/// per-cell dominant-priority labels, runs shorter than the chattering window
/// (5 cells) merged away, then sign changes counted.
int count_switches(const OptimalSolution& sol);

/// The filtered priority runs (class, cell count) behind count_switches.
std::vector<std::pair<JobClass, int>> priority_phases(const OptimalSolution& sol);

}  // namespace reflux
