// Primal-dual interior-point solve of the transcribed control problem in its
// staircase form: per-cell controls plus per-node states coupled by the exact
// propagation equalities.  The normal-equations matrix is banded (half
// bandwidth 5), so each iteration costs O(n); grids of tens of thousands of
// cells are routine.
//
// This solves the same mathematical program as the control-space
// transcription in lp.hpp (states there are eliminated affinely); the two
// routes cross-validate each other at small grid sizes.
#pragma once

#include <span>
#include <vector>

#include "reflux/params.hpp"
#include "reflux/state.hpp"

namespace reflux {

struct IpmOptions {
  double gap_tol = 1e-11;    // relative duality gap
  double feas_tol = 1e-10;   // relative primal/dual infeasibility
  int max_iterations = 200;
  bool require_convergence = true;  // throw on stall instead of returning best
};

struct IpmResult {
  enum class Status { converged, loose };
  Status status = Status::converged;
  std::vector<double> u1;  // per-cell controls
  std::vector<double> u2;
  double objective = 0.0;  // includes the control-free constant
  double duality_gap = 0.0;
  double primal_infeasibility = 0.0;
  double dual_infeasibility = 0.0;
  int iterations = 0;
};

IpmResult solve_staircase_ipm(const Params& p, const State& q0,
                              std::span<const double> node_times,
                              const IpmOptions& opts = {});

}  // namespace reflux
