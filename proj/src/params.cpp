#include "reflux/params.hpp"

namespace reflux {

double effective_return_rate(const Params& p, JobClass c) { return p.kappa(c); }

Regime classify_regime(const Params& p) {
  // Exact floating comparison: the boundary kappa_1 == kappa_2 belongs to the
  // fixed-priority side.  Callers needing a tolerance band impose their own.
  return p.kappa(JobClass::class1) <= p.kappa(JobClass::class2)
             ? Regime::fixed_priority_optimal
             : Regime::state_dependent_needed;
}

}  // namespace reflux
