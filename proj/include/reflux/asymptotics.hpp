// Closed-form cost accounting for a fixed-priority policy started from the
// symmetric state (q1p, q1r, q2p, q2r) = (eps, 0, eps, 0): the clearance time
// of the prioritized class (stage A), the implicit depletion interval of the
// other class (stage B), both stage costs, and the small-eps / large-eps
// expansions of the total.
#pragma once

#include "reflux/params.hpp"

namespace reflux {

/// First time the prioritized class's backlog eps is cleared under full
/// service: the unique root t of eps = mu[(1-r)t + (r/gamma)(1 - e^{-gamma t})],
/// found by bisection on [eps/mu, eps/((1-r) mu)] to machine precision.
double clearance_time(const Params& p, JobClass cls, double eps);

/// I_i(eps): cost accumulated by the prioritized class itself over stage A.
double clearance_cost_integral(const Params& p, JobClass cls, double eps);

struct FixedPriorityBreakdown {
  JobClass prioritized_class = JobClass::class1;
  double epsilon = 0.0;
  double t_i = 0.0;       // stage-A clearance time
  double a_i = 0.0;       // holding fraction at t_i: r_i (1 - e^{-gamma_i t_i})
  double lambda_i = 0.0;  // (1 - r_i) gamma_i
  double delta_j = 0.0;   // stage-B length
  double qjr_end = 0.0;   // other class's return queue when its backlog clears
  double cost_stage_a = 0.0;
  double cost_stage_b = 0.0;
  double total = 0.0;
};

/// All stage quantities for fixed_priority(prioritized) from (eps, 0, eps, 0).
/// Requires eps > 0.  The coincidence gamma_j == lambda_i is a removable
/// singularity and is evaluated through uniformly stable forms.
FixedPriorityBreakdown breakdown(const Params& p, JobClass prioritized, double eps);

struct SmallEpsPrediction {
  double stage_a = 0.0;  // mu [ 3/2 x^2 + 2/3 gamma_i r_i x^3 ],  x = eps/mu
  double stage_b = 0.0;  // mu [ 1/2 x^2 + (gamma_i r_i / 2 + gamma_j r_j / 6) x^3 ]
  double total = 0.0;
};

SmallEpsPrediction small_eps_prediction(const Params& p, JobClass prioritized,
                                        double eps);

/// Leading large-eps total: (eps^2/mu) [ 3/(2(1-r_i)) + 1/(2(1-r_j)) ].
double large_eps_prediction(const Params& p, JobClass prioritized, double eps);

/// Third-order series of the clearance time:
/// x + r gamma x^2/2 + gamma^2 r (3r - 1) x^3 / 6.
double clearance_time_series(const Params& p, JobClass cls, double eps);

/// Second-order series of the stage-B length:
/// x + (gamma_i r_i + gamma_j r_j / 2) x^2.
double stage_b_length_series(const Params& p, JobClass prioritized, double eps);

}  // namespace reflux
