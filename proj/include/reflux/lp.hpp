// Direct transcription of the optimal-control problem onto a time grid, in
// control space: piecewise-constant u_i per cell, states expressed affinely
// in u through the exact propagation kernels, primary-queue nonnegativity
// enforced at grid nodes.  Also a dense bounded-variable simplex used as an
// independent solve route at small grid sizes.
#pragma once

#include <span>
#include <vector>

#include "reflux/params.hpp"
#include "reflux/state.hpp"

namespace reflux {

/// Dense packing LP:  min c0 + c.x  s.t.  A x <= b,  0 <= x <= ub.
struct DenseLp {
  std::vector<std::vector<double>> A;
  std::vector<double> b;
  std::vector<double> c;
  std::vector<double> ub;
  double c0 = 0.0;
};

/// The transcribed instance.  Rows and objective coefficients are generated
/// on demand from the kernel closed forms; nothing dense is stored unless
/// materialize() is called (small grids only).
class LpInstance {
 public:
  LpInstance(const Params& p, const State& q0, std::vector<double> node_times);

  int num_cells() const { return static_cast<int>(node_times_.size()) - 1; }
  int num_vars() const { return 2 * num_cells(); }
  /// Joint-capacity rows: one per cell.
  int num_cap_rows() const { return num_cells(); }
  /// State-nonnegativity rows: one per class per node (including node 0).
  int num_state_rows() const { return 2 * (num_cells() + 1); }
  int num_rows() const { return num_cap_rows() + num_state_rows(); }
  /// Variable bound pairs 0 <= u_i[k] <= 1.
  int num_bound_pairs() const { return num_vars(); }

  const std::vector<double>& node_times() const { return node_times_; }
  double horizon() const { return node_times_.back(); }
  const Params& params() const { return params_; }
  const State& initial_state() const { return q0_; }

  /// Objective coefficient of u_cls[cell]; nonpositive.
  double weight(JobClass cls, int cell) const;
  /// Control-free part of the objective, C_T(q0).
  double objective_constant() const;
  double objective_value(std::span<const Allocation> cell_controls) const;

  /// q_cls^p at grid node k as an affine function of the controls:
  /// rhs + sum_{m<k} coeff(cls, k, m) u_cls[m]; coeff is nonpositive.
  double state_coeff(JobClass cls, int node, int cell) const;
  double state_rhs(JobClass cls, int node) const;
  double primary_at_node(JobClass cls, int node,
                         std::span<const Allocation> cell_controls) const;

  /// Largest constraint violation of the given controls (0 when feasible).
  double max_violation(std::span<const Allocation> cell_controls) const;

  /// Dense form for the simplex route; guarded to small grids.
  DenseLp materialize(int max_cells = 600) const;

 private:
  Params params_;
  State q0_;
  std::vector<double> node_times_;
};

LpInstance transcribe_lp(const Params& p, const State& q0,
                         std::span<const double> node_times);

struct SimplexResult {
  enum class Status { optimal, iteration_limit };
  Status status = Status::optimal;
  std::vector<double> x;
  double objective = 0.0;  // includes c0
  int iterations = 0;
};

/// Bounded-variable primal simplex on a packing LP with b >= 0 (the all-slack
/// basis is then feasible, so no phase one is needed).
SimplexResult solve_bounded_simplex(const DenseLp& lp, int max_iterations = 0);

}  // namespace reflux
