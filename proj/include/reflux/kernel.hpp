// Kernel representation of the holding cost.  A unit of class-i control
// applied tau before the horizon changes the total cost through the
// cumulative kernel K_i(tau); the full cost splits into a control-free part
// C_T(q0) plus per-class integrals of u_i(s) K_i(T - s).
#pragma once

#include <optional>
#include <span>
#include <vector>

#include "reflux/dynamics.hpp"
#include "reflux/params.hpp"
#include "reflux/state.hpp"

namespace reflux {

/// k_i(tau) = mu [(r_i - 1) - r_i e^{-gamma_i tau}].
double kernel_k(const Params& p, JobClass cls, double tau);

/// K_i(tau) = int_0^tau k_i = mu [(r_i - 1) tau - (r_i/gamma_i)(1 - e^{-gamma_i tau})].
double kernel_K(const Params& p, JobClass cls, double tau);

/// int_0^tau K_i, the antiderivative used for exact per-segment control costs.
double kernel_K_antiderivative(const Params& p, JobClass cls, double tau);

struct CostDecomposition {
  double constant_part = 0.0;  // C_T(q0), depends only on the initial state
  double control_part = 0.0;   // sum_i int u_i(s) K_i(T-s) ds
  double total = 0.0;          // constant_part + control_part
};

/// Decompose the cost of a control path, evaluating the control integral
/// exactly per segment through the closed antiderivative of K_i.  The total
/// must reproduce the trajectory's directly accumulated cost.
CostDecomposition cost_via_kernel(const Trajectory& traj, const State& q0,
                                  const Params& p, double horizon);

struct Lemma1Report {
  bool all_nonpositive = false;
  /// Evaluated only when kappa_1 <= kappa_2; nullopt marks not-applicable.
  std::optional<bool> dominance_holds;
  double max_kernel_value = 0.0;        // max over the grid of K_i(tau)
  double max_dominance_violation = 0.0; // max over the grid of K_1 - K_2
};

/// Grid check of the kernel ordering: K_i <= 0 everywhere, and K_1 <= K_2
/// whenever kappa_1 <= kappa_2.
Lemma1Report lemma1_check(const Params& p, std::span<const double> tau_grid);

/// Default tau grid: [0, 100/min(gamma_1, gamma_2)] with 10^4 points.  The
/// kernel curvature lives on the 1/gamma timescale; beyond that the linear
/// term dominates and the sign is settled.
std::vector<double> default_lemma1_grid(const Params& p);

}  // namespace reflux
