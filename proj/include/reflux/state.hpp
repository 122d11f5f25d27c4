// Queue states and capacity allocations.
#pragma once

#include <array>
#include <cmath>

#include "reflux/params.hpp"

namespace reflux {

/// Numerical zero band for state components: values inside the band are
/// treated as exact zeros for admissibility decisions.
inline constexpr double kZeroBand = 1e-12;

/// The four queue levels at an instant: primary and return queue per class.
struct State {
  double q1p = 0.0;
  double q1r = 0.0;
  double q2p = 0.0;
  double q2r = 0.0;

  double primary(JobClass c) const { return c == JobClass::class1 ? q1p : q2p; }
  double orbit(JobClass c) const { return c == JobClass::class1 ? q1r : q2r; }
  void set_primary(JobClass c, double v) { (c == JobClass::class1 ? q1p : q2p) = v; }
  void set_orbit(JobClass c, double v) { (c == JobClass::class1 ? q1r : q2r) = v; }

  bool all_zero(double band = kZeroBand) const {
    return q1p <= band && q1r <= band && q2p <= band && q2r <= band;
  }
  double min_component() const {
    return std::min(std::min(q1p, q1r), std::min(q2p, q2r));
  }
  /// Snap components inside the zero band to exact zeros.
  State clamped(double band = kZeroBand) const {
    auto snap = [band](double v) { return (v > band) ? v : 0.0; };
    return State{snap(q1p), snap(q1r), snap(q2p), snap(q2r)};
  }
};

/// Capacity split (u1, u2) with u_i >= 0 and u1 + u2 <= 1.
struct Allocation {
  double u1 = 0.0;
  double u2 = 0.0;

  double u(JobClass c) const { return c == JobClass::class1 ? u1 : u2; }
  void set(JobClass c, double v) { (c == JobClass::class1 ? u1 : u2) = v; }
};

/// Total outstanding work of one class: primary plus return queue.
inline double total_class_work(const State& s, JobClass c) {
  return s.primary(c) + s.orbit(c);
}

}  // namespace reflux
