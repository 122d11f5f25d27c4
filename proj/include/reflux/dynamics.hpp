// Exact trajectory propagation under piecewise-structured controls.
//
// Per class the dynamics are linear and decoupled given the control:
//   d/dt q^p = -mu u + gamma q^r,   d/dt q^r = r mu u - gamma q^r.
// Every control this library produces is, on each segment, of the form
// u(t0 + s) = level + coeff * e^{-rate s} (constants included), or an exact
// boundary hold that pins q^p at zero.  All propagation, cost, and served
// integrals are closed-form; there is no time-stepping error.
#pragma once

#include <array>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "reflux/params.hpp"
#include "reflux/state.hpp"

namespace reflux {

class Policy;

/// Per-class capacity caps at a state: u_i_max = 1 while q_i^p > 0, else the
/// boundary-holding rate min(1, gamima_i q_i^r / mu); joint cap is always 1.
struct AdmissibleBounds {
  double u1_max = 1.0;
  double u2_max = 1.0;
  double joint_cap = 1.0;

  double u_max(JobClass c) const { return c == JobClass::class1 ? u1_max : u2_max; }
};

AdmissibleBounds admissible_bounds(const State& s, const Params& p);

/// Whether the allocation is inside the admissible set at this state
/// (up to a small numerical slack).
bool is_admissible(const State& s, const Allocation& a, const Params& p,
                   double slack = 1e-9);

/// Instantaneous state derivative (q1p', q1r', q2p', q2r').
/// Throws std::invalid_argument if the allocation is inadmissible.
std::array<double, 4> drift(const State& s, const Allocation& a, const Params& p);

/// Raised when a propagation step would drive a primary queue negative; the
/// bracket locates the boundary crossing inside the step.
class BoundaryViolation : public std::runtime_error {
 public:
  BoundaryViolation(JobClass cls, double lo, double hi)
      : std::runtime_error("primary queue of class " + std::to_string(label(cls)) +
                           " crosses zero inside step, t in [" + std::to_string(lo) +
                           ", " + std::to_string(hi) + "]"),
        job_class(cls),
        bracket_lo(lo),
        bracket_hi(hi) {}

  JobClass job_class;
  double bracket_lo;
  double bracket_hi;
};

/// Closed-form propagation over [0, dt) under a constant allocation.  The
/// caller guarantees no boundary crossing inside the interval; a resulting
/// negative primary queue raises BoundaryViolation with a crossing bracket.
State propagate_constant_control(const State& s, const Allocation& a,
                                 const Params& p, double dt);

/// First time t > 0 at which q_cls^p reaches zero under the constant
/// allocation, located by safeguarded root-finding on the closed form;
/// nullopt if the queue never crosses (including q_cls^p already zero).
std::optional<double> hit_time(const State& s, const Allocation& a,
                               const Params& p, JobClass cls);

/// One class's control over a segment.
struct ControlForm {
  enum class Mode { constant, exponential, hold };
  Mode mode = Mode::constant;
  double level = 0.0;  // constant part
  double coeff = 0.0;  // multiplies e^{-rate s}
  double rate = 0.0;

  static ControlForm make_constant(double u) { return {Mode::constant, u, 0.0, 0.0}; }
  static ControlForm make_exponential(double level, double coeff, double rate) {
    return {Mode::exponential, level, coeff, rate};
  }
  /// Exact boundary hold; numeric fields mirror u(s) = (gamma q^r0/mu) e^{-lambda s}.
  static ControlForm make_hold(double hold_rate0, double lambda) {
    return {Mode::hold, 0.0, hold_rate0, lambda};
  }

  double value_at(double s) const {
    if (mode == Mode::constant) return level;
    return level + coeff * std::exp(-rate * s);
  }
  bool is_constant_zero() const {
    return mode == Mode::constant ? level == 0.0 : (level == 0.0 && coeff == 0.0);
  }
};

/// Exact per-class segment quantities.
struct ClassSegment {
  double qp_end = 0.0;
  double qr_end = 0.0;
  double cost = 0.0;    // int q^p dt over the segment
  double served = 0.0;  // int u dt over the segment
};

/// Propagate one class over dt under the given control form.
ClassSegment propagate_class(double qp0, double qr0, const ControlForm& form,
                             double r, double gamma, double mu, double dt);

/// A maximal interval on which both classes' control forms are fixed.
struct Segment {
  double t0 = 0.0;
  double dt = 0.0;
  State start;
  State end;
  std::array<ControlForm, 2> control;
  std::array<double, 2> cost{};    // per-class int q^p dt
  std::array<double, 2> served{};  // per-class int u dt

  Allocation allocation_at_offset(double s) const {
    return Allocation{control[0].value_at(s), control[1].value_at(s)};
  }
};

/// Piecewise record of a simulated (or reconstructed) control path.  Segment
/// starts are the breakpoints; states and allocations between breakpoints are
/// recovered exactly from the segment closed forms.
class Trajectory {
 public:
  Trajectory() = default;
  Trajectory(std::vector<Segment> segments, double horizon, const Params& p);

  double horizon() const { return horizon_; }
  double accumulated_cost() const { return accumulated_cost_; }
  const std::vector<Segment>& segments() const { return segments_; }
  std::size_t num_segments() const { return segments_.size(); }

  State initial_state() const;
  State final_state() const;
  State state_at(double t) const;
  Allocation allocation_at(double t) const;
  double cost_until(double t) const;

  /// Per-class served capacity int_0^T u_i dt.
  double total_served(JobClass c) const;

 private:
  std::size_t segment_index(double t) const;

  std::vector<Segment> segments_;
  double horizon_ = 0.0;
  double accumulated_cost_ = 0.0;
  std::vector<double> cost_prefix_;  // cumulative cost before each segment
  std::optional<Params> params_;
};

/// Exact trajectory of a policy over [0, horizon].  Segments are split at
/// policy switches and queue-boundary events; cost is the exact integral of
/// q_1^p + q_2^p.  Throws std::invalid_argument if the policy ever prescribes
/// an inadmissible allocation.
Trajectory simulate(const Policy& policy, const State& q0, const Params& p,
                    double horizon);

/// Trajectory of explicit piecewise-constant controls on the given node grid
/// (node_times.size() == controls.size() + 1).
Trajectory propagate_piecewise(const State& q0, const Params& p,
                               std::span<const Allocation> controls,
                               std::span<const double> node_times,
                               double admissibility_slack = 1e-9);

namespace detail {

/// First s in (0, t_max] with q^p(s) = 0 under the control form, for a class
/// with start values (qp0, qr0).  If from_positive, qp0 > 0 and the first
/// downcross is returned; otherwise qp0 == 0 and the first return to zero
/// after a positive excursion is returned (nullopt if there is none).
std::optional<double> first_primary_zero(double qp0, double qr0,
                                         const ControlForm& form, double r,
                                         double gamma, double mu, double t_max,
                                         bool from_positive);

}  // namespace detail

}  // namespace reflux
