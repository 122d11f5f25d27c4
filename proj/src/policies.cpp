#include "reflux/policies.hpp"

#include <stdexcept>

namespace reflux {

Policy Policy::fixed_priority(JobClass cls) {
  return Policy(Kind::fixed_priority, cls, 0.0, 0.0);
}

Policy Policy::switch_at_time(JobClass first, double t_switch) {
  if (!(t_switch >= 0.0))
    throw std::invalid_argument("switch_at_time: t_switch must be >= 0");
  return Policy(Kind::switch_at_time, first, t_switch, 0.0);
}

Policy Policy::switch_on_curve(JobClass first, double threshold) {
  if (!(threshold >= 0.0))
    throw std::invalid_argument("switch_on_curve: threshold must be >= 0");
  return Policy(Kind::switch_on_curve, first, 0.0, threshold);
}

Policy fixed_priority(JobClass cls) { return Policy::fixed_priority(cls); }
Policy switch_at_time(JobClass first, double t_switch) {
  return Policy::switch_at_time(first, t_switch);
}
Policy switch_on_curve(JobClass first, double threshold) {
  return Policy::switch_on_curve(first, threshold);
}

JobClass Policy::nominal_priority(const State& s, double time) const {
  switch (kind_) {
    case Kind::fixed_priority:
      return first_;
    case Kind::switch_at_time:
      return time < switch_time_ ? first_ : other(first_);
    case Kind::switch_on_curve:
      return (s.q1p + s.q2p > threshold_) ? first_ : other(first_);
  }
  return first_;
}

Allocation Policy::allocation_at(const State& s, const Params& p,
                                 double time) const {
  const State q = s.clamped();
  if (q.all_zero()) return Allocation{0.0, 0.0};

  const JobClass pc = nominal_priority(q, time);
  const JobClass jc = other(pc);

  Allocation a;
  if (q.primary(pc) > 0.0) {
    a.set(pc, 1.0);
  } else {
    // Boundary-holding: just enough to keep the empty primary queue empty.
    // If the holding rate exceeds capacity, the full capacity goes to the
    // prioritized class and its primary queue grows (still admissible).
    a.set(pc, std::min(1.0, p.gamma(pc) * q.orbit(pc) / p.mu));
  }
  const double leftover = 1.0 - a.u(pc);
  if (q.primary(jc) > 0.0) {
    a.set(jc, leftover);
  } else {
    a.set(jc, std::min(leftover, p.gamma(jc) * q.orbit(jc) / p.mu));
  }
  return a;
}

std::optional<JobClass> priority_of(const Policy& policy, const State& s,
                                    double time) {
  if (s.clamped().all_zero()) return std::nullopt;
  return policy.nominal_priority(s, time);
}

}  // namespace reflux
