// Allocation policies: fixed priority, single time-indexed switch, and a
// total-backlog threshold switch.  A policy names the prioritized class at
// each (state, time); the allocation then follows the shared rule: full
// capacity while the prioritized primary queue is positive, boundary-holding
// once it empties, leftover to the other class.
#pragma once

#include <optional>

#include "reflux/params.hpp"
#include "reflux/state.hpp"

namespace reflux {

class Policy {
 public:
  enum class Kind { fixed_priority, switch_at_time, switch_on_curve };

  static Policy fixed_priority(JobClass cls);
  /// Prioritize `first` on [0, t_switch), the other class afterwards.
  static Policy switch_at_time(JobClass first, double t_switch);
  /// Prioritize `first` while q1p + q2p > threshold, the other class below.
  static Policy switch_on_curve(JobClass first, double threshold);

  Kind kind() const { return kind_; }
  JobClass first_class() const { return first_; }
  double switch_time() const { return switch_time_; }
  double threshold() const { return threshold_; }

  /// The class the rule nominally prioritizes at (state, time).
  JobClass nominal_priority(const State& s, double time) const;

  /// Evaluation rule: the prescribed allocation, always admissible.
  Allocation allocation_at(const State& s, const Params& p, double time) const;

 private:
  Policy(Kind k, JobClass first, double t_switch, double threshold)
      : kind_(k), first_(first), switch_time_(t_switch), threshold_(threshold) {}

  Kind kind_;
  JobClass first_;
  double switch_time_ = 0.0;
  double threshold_ = 0.0;
};

Policy fixed_priority(JobClass cls);
Policy switch_at_time(JobClass first, double t_switch);
Policy switch_on_curve(JobClass first, double threshold);

/// The class currently prioritized, or nullopt at an entirely empty state.
std::optional<JobClass> priority_of(const Policy& policy, const State& s,
                                    double time);

}  // namespace reflux
