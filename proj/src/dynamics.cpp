#include "reflux/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "reflux/phi.hpp"
#include "reflux/policies.hpp"

namespace reflux {

namespace {

std::string fmt_state(const State& s) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "(q1p=%.17g, q1r=%.17g, q2p=%.17g, q2r=%.17g)",
                s.q1p, s.q1r, s.q2p, s.q2r);
  return buf;
}

}  // namespace

AdmissibleBounds admissible_bounds(const State& s, const Params& p) {
  AdmissibleBounds b;
  const State q = s.clamped();
  if (q.q1p <= 0.0) b.u1_max = std::min(1.0, p.gamma1 * q.q1r / p.mu);
  if (q.q2p <= 0.0) b.u2_max = std::min(1.0, p.gamma2 * q.q2r / p.mu);
  return b;
}

bool is_admissible(const State& s, const Allocation& a, const Params& p,
                   double slack) {
  if (a.u1 < -slack || a.u2 < -slack) return false;
  if (a.u1 + a.u2 > 1.0 + slack) return false;
  const State q = s.clamped();
  for (JobClass c : {JobClass::class1, JobClass::class2}) {
    if (q.primary(c) <= 0.0 &&
        p.mu * a.u(c) > p.gamma(c) * q.orbit(c) + slack * p.mu)
      return false;
  }
  return true;
}

std::array<double, 4> drift(const State& s, const Allocation& a, const Params& p) {
  if (!is_admissible(s, a, p))
    throw std::invalid_argument("drift: inadmissible allocation (u1=" +
                                std::to_string(a.u1) + ", u2=" + std::to_string(a.u2) +
                                ") at state " + fmt_state(s));
  return {-p.mu * a.u1 + p.gamma1 * s.q1r, p.r1 * p.mu * a.u1 - p.gamma1 * s.q1r,
          -p.mu * a.u2 + p.gamma2 * s.q2r, p.r2 * p.mu * a.u2 - p.gamma2 * s.q2r};
}

ClassSegment propagate_class(double qp0, double qr0, const ControlForm& form,
                             double r, double gamma, double mu, double dt) {
  using namespace detail;
  if (dt == 0.0) return {qp0, qr0, 0.0, 0.0};

  if (form.mode == ControlForm::Mode::hold) {
    const double lambda = (1.0 - r) * gamma;
    ClassSegment out;
    out.qp_end = 0.0;
    out.qr_end = qr0 * std::exp(-lambda * dt);
    out.cost = 0.0;
    out.served = (gamma * qr0 / mu) * dt * phi1(lambda * dt);
    return out;
  }

  double c = form.level;
  double d = form.mode == ControlForm::Mode::exponential ? form.coeff : 0.0;
  double lam = form.mode == ControlForm::Mode::exponential ? form.rate : 0.0;
  if (d != 0.0 && lam == 0.0) {  // fold a zero-rate exponential into the level
    c += d;
    d = 0.0;
  }

  const double xg = gamma * dt;
  const double xl = lam * dt;
  const double Eg = dt * phi1(xg);               // int e^{-gamma s}
  const double Gg = gamma * dt * dt * phi2(xg);  // int (1 - e^{-gamma s})

  ClassSegment out;
  out.qr_end = std::exp(-xg) * qr0 + r * mu * c * Eg +
               r * mu * d * dt * exp_difference_quotient(xl, xg);
  out.served = c * dt + d * dt * phi1(xl);

  const double int_gqr = qr0 * (gamma * Eg) + r * mu * c * Gg -
                         r * mu * d * gamma * dt * dt * dd_phi1(xl, xg);
  out.qp_end = qp0 - mu * out.served + int_gqr;

  out.cost = qp0 * dt - mu * (0.5 * c * dt * dt + d * dt * dt * phi2(xl)) +
             qr0 * Gg + r * mu * c * gamma * dt * dt * dt * phi3(xg) -
             r * mu * d * gamma * dt * dt * dt * dd_phi2(xl, xg);
  return out;
}

namespace {

double qp_at(double qp0, double qr0, const ControlForm& form, double r,
             double gamma, double mu, double s) {
  return propagate_class(qp0, qr0, form, r, gamma, mu, s).qp_end;
}

double qr_at(double qr0, const ControlForm& form, double r, double gamma,
             double mu, double s) {
  return propagate_class(0.0, qr0, form, r, gamma, mu, s).qr_end;
}

double qp_dot_at(double qr0, const ControlForm& form, double r, double gamma,
                 double mu, double s) {
  return -mu * form.value_at(s) + gamma * qr_at(qr0, form, r, gamma, mu, s);
}

// Bisection for f(s) = 0 on [lo, hi] given f(lo) = f_lo with a sign change
// across the bracket; returns the upper end of the collapsed bracket.
template <typename F>
double bisect_root(const F& f, double lo, double hi, double f_lo) {
  const double tol = 1e-15 * std::max(1.0, hi);
  const double sgn = f_lo >= 0.0 ? 1.0 : -1.0;
  for (int it = 0; it < 200 && hi - lo > tol; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (sgn * f(mid) > 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return hi;
}

}  // namespace

namespace detail {

std::optional<double> first_primary_zero(double qp0, double qr0,
                                         const ControlForm& form, double r,
                                         double gamma, double mu, double t_max,
                                         bool from_positive) {
  if (t_max <= 0.0) return std::nullopt;

  double c = form.level;
  double d = form.mode == ControlForm::Mode::exponential ? form.coeff : 0.0;
  double lam = form.mode == ControlForm::Mode::exponential ? form.rate : 0.0;
  if (d != 0.0 && lam == 0.0) {
    c += d;
    d = 0.0;
  }

  auto qdot = [&](double s) { return qp_dot_at(qr0, form, r, gamma, mu, s); };
  auto qp = [&](double s) { return qp_at(qp0, qr0, form, r, gamma, mu, s); };

  // q^p'(s) = alpha + beta e^{-lam s} + delta e^{-gamma s} has at most two
  // roots; between consecutive roots q^p is monotone.  The decompositions
  // below only guide bracketing; roots are refined on the stable evaluators.
  std::vector<double> pieces;
  pieces.push_back(0.0);

  auto push_qdot_roots_on = [&](double lo, double hi) {
    const double flo = qdot(lo), fhi = qdot(hi);
    if ((flo > 0.0 && fhi <= 0.0) || (flo < 0.0 && fhi >= 0.0)) {
      const double root = bisect_root(qdot, lo, hi, flo);
      if (root > 0.0 && root < t_max) pieces.push_back(root);
    }
  };

  double s_bend = -1.0;  // root of q^p'', splits q^p' into monotone halves
  if (d == 0.0) {
    // q^p' = alpha + delta e^{-gamma s}: already monotone.
  } else if (std::fabs(gamma - lam) <= 1e-6 * (gamma + lam)) {
    // Near-coincident rates: q^p' ~ alpha + (b + a s) e^{-gamma s}.
    const double bT = gamma * qr0 - mu * d - r * mu * c;
    const double aT = r * mu * gamma * d;
    if (aT != 0.0) s_bend = (aT - gamma * bT) / (gamma * aT);
  } else {
    const double beta = mu * d * (r * gamma / (gamma - lam) - 1.0);
    const double delta = gamma * qr0 - r * mu * c - r * mu * d * gamma / (gamma - lam);
    if (lam > 0.0 && beta != 0.0 && delta != 0.0) {
      const double ratio = -gamma * delta / (lam * beta);
      if (ratio > 0.0) s_bend = std::log(ratio) / (gamma - lam);
    }
  }

  if (s_bend > 0.0 && s_bend < t_max) {
    push_qdot_roots_on(0.0, s_bend);
    push_qdot_roots_on(s_bend, t_max);
  } else {
    push_qdot_roots_on(0.0, t_max);
  }
  pieces.push_back(t_max);
  std::sort(pieces.begin(), pieces.end());

  const double ftol = 1e-13 * std::max(1.0, qp0 + qr0);

  double prev = 0.0;
  double qp_prev = qp0;
  bool armed = from_positive;  // hunting for a downcross once q^p is positive
  for (std::size_t i = 1; i < pieces.size(); ++i) {
    const double sb = pieces[i];
    if (sb <= prev) continue;
    const double qb = qp(sb);
    if (!armed) {
      if (qb > ftol) armed = true;  // the excursion has lifted off
      prev = sb;
      qp_prev = qb;
      continue;
    }
    if (qb <= ftol) {
      if (qp_prev <= ftol) {  // flat at zero across the piece: not a crossing
        prev = sb;
        qp_prev = qb;
        continue;
      }
      auto shifted = [&](double s) { return qp(s) - ftol; };
      return bisect_root(shifted, prev, sb, qp_prev - ftol);
    }
    prev = sb;
    qp_prev = qb;
  }
  return std::nullopt;
}

}  // namespace detail

State propagate_constant_control(const State& s, const Allocation& a,
                                 const Params& p, double dt) {
  if (!(dt >= 0.0))
    throw std::invalid_argument("propagate_constant_control: dt must be >= 0");
  if (!is_admissible(s, a, p))
    throw std::invalid_argument(
        "propagate_constant_control: inadmissible allocation at state " +
        fmt_state(s));
  State out = s;
  const double tol = kZeroBand * std::max({1.0, s.q1p + s.q1r, s.q2p + s.q2r});
  for (JobClass c : {JobClass::class1, JobClass::class2}) {
    const ControlForm form = ControlForm::make_constant(std::max(0.0, a.u(c)));
    const auto seg =
        propagate_class(s.primary(c), s.orbit(c), form, p.r(c), p.gamma(c), p.mu, dt);
    if (seg.qp_end < -tol) {
      auto f = [&](double t) {
        return qp_at(s.primary(c), s.orbit(c), form, p.r(c), p.gamma(c), p.mu, t);
      };
      double lo = 0.0, hi = dt;
      for (int it = 0; it < 60 && hi - lo > 1e-14 * dt; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (f(mid) >= 0.0)
          lo = mid;
        else
          hi = mid;
      }
      throw BoundaryViolation(c, lo, hi);
    }
    out.set_primary(c, std::fabs(seg.qp_end) < tol ? 0.0 : seg.qp_end);
    out.set_orbit(c, std::fabs(seg.qr_end) < tol ? 0.0 : seg.qr_end);
  }
  return out;
}

std::optional<double> hit_time(const State& s, const Allocation& a,
                               const Params& p, JobClass cls) {
  const State q = s.clamped();
  if (q.primary(cls) <= 0.0) return std::nullopt;  // no positive-to-zero crossing
  const double u = std::max(0.0, a.u(cls));
  if (u <= 0.0) return std::nullopt;  // queue is frozen or only fed

  // Long-run slope is -(1-r) mu u < 0, so a crossing exists; expand until
  // the closed form is negative, then locate the first downcross.
  const double slope = (1.0 - p.r(cls)) * p.mu * u;
  double t_up = 2.0 * (q.primary(cls) + q.orbit(cls)) / slope + 1.0 / p.gamma(cls);
  const ControlForm form = ControlForm::make_constant(u);
  while (qp_at(q.primary(cls), q.orbit(cls), form, p.r(cls), p.gamma(cls), p.mu,
               t_up) > 0.0)
    t_up *= 2.0;
  return detail::first_primary_zero(q.primary(cls), q.orbit(cls), form, p.r(cls),
                                    p.gamma(cls), p.mu, t_up, true);
}

Trajectory::Trajectory(std::vector<Segment> segments, double horizon,
                       const Params& p)
    : segments_(std::move(segments)), horizon_(horizon), params_(p) {
  cost_prefix_.reserve(segments_.size());
  double acc = 0.0, comp = 0.0;
  for (const Segment& seg : segments_) {
    cost_prefix_.push_back(acc);
    // Kahan accumulation: reconstructed trajectories can have thousands of cells.
    const double add = (seg.cost[0] + seg.cost[1]) - comp;
    const double next = acc + add;
    comp = (next - acc) - add;
    acc = next;
  }
  accumulated_cost_ = acc;
}

State Trajectory::initial_state() const {
  return segments_.empty() ? State{} : segments_.front().start;
}

State Trajectory::final_state() const {
  return segments_.empty() ? State{} : segments_.back().end;
}

std::size_t Trajectory::segment_index(double t) const {
  std::size_t lo = 0, hi = segments_.size();
  while (hi - lo > 1) {
    const std::size_t mid = (lo + hi) / 2;
    if (segments_[mid].t0 <= t)
      lo = mid;
    else
      hi = mid;
  }
  return lo;
}

State Trajectory::state_at(double t) const {
  if (segments_.empty()) return State{};
  if (t <= segments_.front().t0) return segments_.front().start;
  if (t >= horizon_) return final_state();
  const Segment& seg = segments_[segment_index(t)];
  const double s = std::min(t - seg.t0, seg.dt);
  const Params& p = *params_;
  State out;
  for (JobClass c : {JobClass::class1, JobClass::class2}) {
    const auto cs = propagate_class(seg.start.primary(c), seg.start.orbit(c),
                                    seg.control[index(c)], p.r(c), p.gamma(c),
                                    p.mu, s);
    out.set_primary(c, cs.qp_end);
    out.set_orbit(c, cs.qr_end);
  }
  return out.clamped();
}

Allocation Trajectory::allocation_at(double t) const {
  if (segments_.empty()) return Allocation{};
  const double tc = std::clamp(t, segments_.front().t0, horizon_);
  const Segment& seg = segments_[segment_index(tc)];
  return seg.allocation_at_offset(std::min(tc - seg.t0, seg.dt));
}

double Trajectory::cost_until(double t) const {
  if (segments_.empty() || t <= segments_.front().t0) return 0.0;
  if (t >= horizon_) return accumulated_cost_;
  const std::size_t i = segment_index(t);
  const Segment& seg = segments_[i];
  const double s = std::min(t - seg.t0, seg.dt);
  const Params& p = *params_;
  double partial = 0.0;
  for (JobClass c : {JobClass::class1, JobClass::class2})
    partial += propagate_class(seg.start.primary(c), seg.start.orbit(c),
                               seg.control[index(c)], p.r(c), p.gamma(c), p.mu, s)
                   .cost;
  return cost_prefix_[i] + partial;
}

double Trajectory::total_served(JobClass c) const {
  double acc = 0.0;
  for (const Segment& seg : segments_) acc += seg.served[index(c)];
  return acc;
}

namespace {

struct SegmentPlan {
  std::array<ControlForm, 2> form;
  std::array<bool, 2> watch_downcross{false, false};
  std::array<bool, 2> watch_excursion{false, false};
};

// Build both classes' control forms for the upcoming segment given the
// prioritized class.  States are pre-clamped, so primary(c) > 0 is exact.
SegmentPlan plan_segment(const State& q, JobClass pc, const Params& p) {
  SegmentPlan plan;
  const JobClass jc = other(pc);
  const int pi = index(pc), ji = index(jc);

  const double hold_p = p.gamma(pc) * q.orbit(pc) / p.mu;
  if (q.primary(pc) > 0.0) {
    plan.form[pi] = ControlForm::make_constant(1.0);
    plan.watch_downcross[pi] = true;
  } else if (hold_p <= 1.0) {
    plan.form[pi] = ControlForm::make_hold(hold_p, p.lambda(pc));
  } else {
    // Holding rate exceeds capacity: full capacity, queue grows off zero.
    plan.form[pi] = ControlForm::make_constant(1.0);
    plan.watch_excursion[pi] = true;
  }

  ControlForm leftover = ControlForm::make_constant(0.0);
  if (plan.form[pi].mode == ControlForm::Mode::hold)
    leftover = ControlForm::make_exponential(1.0, -hold_p, p.lambda(pc));

  const double leftover0 = leftover.value_at(0.0);
  if (q.primary(jc) > 0.0) {
    plan.form[ji] = leftover;
    plan.watch_downcross[ji] = !leftover.is_constant_zero();
  } else {
    const double hold_j = p.gamma(jc) * q.orbit(jc) / p.mu;
    if (hold_j <= leftover0 + 1e-15) {
      plan.form[ji] = ControlForm::make_hold(hold_j, p.lambda(jc));
    } else {
      // Not enough leftover to hold the boundary: the queue lifts off.
      plan.form[ji] = leftover;
      plan.watch_excursion[ji] = true;
    }
  }
  return plan;
}

}  // namespace

Trajectory simulate(const Policy& policy, const State& q0, const Params& p,
                    double horizon) {
  if (!(horizon >= 0.0))
    throw std::invalid_argument("simulate: horizon must be >= 0");
  if (q0.min_component() < -kZeroBand * std::max(1.0, q0.q1p + q0.q1r + q0.q2p + q0.q2r))
    throw std::invalid_argument("simulate: negative initial state " + fmt_state(q0));

  std::vector<Segment> segments;
  State q = q0.clamped();
  double t = 0.0;
  const double t_eps = 1e-14 * std::max(1.0, horizon);
  int stall_count = 0;

  while (horizon - t > t_eps) {
    const Allocation prescribed = policy.allocation_at(q, p, t);
    if (!is_admissible(q, prescribed, p))
      throw std::invalid_argument("simulate: policy returned inadmissible allocation at state " +
                                  fmt_state(q));

    const JobClass pc = policy.nominal_priority(q, t);
    const SegmentPlan plan = plan_segment(q, pc, p);

    double dt = horizon - t;
    // Exact policy switch boundary.
    if (policy.kind() == Policy::Kind::switch_at_time && t < policy.switch_time() &&
        policy.switch_time() < t + dt)
      dt = policy.switch_time() - t;

    // Queue boundary events.
    for (JobClass c : {JobClass::class1, JobClass::class2}) {
      const int i = index(c);
      if (!plan.watch_downcross[i] && !plan.watch_excursion[i]) continue;
      const auto z = detail::first_primary_zero(q.primary(c), q.orbit(c),
                                                plan.form[i], p.r(c), p.gamma(c),
                                                p.mu, dt, plan.watch_downcross[i]);
      if (z && *z < dt) dt = *z;
    }

    // Threshold-curve crossing: scan the closed form, then bisect the flip.
    if (policy.kind() == Policy::Kind::switch_on_curve) {
      auto total_at = [&](double s) {
        double tot = 0.0;
        for (JobClass c : {JobClass::class1, JobClass::class2})
          tot += propagate_class(q.primary(c), q.orbit(c), plan.form[index(c)],
                                 p.r(c), p.gamma(c), p.mu, s)
                     .qp_end;
        return tot;
      };
      const bool side0 = q.q1p + q.q2p > policy.threshold();
      const int m = 256;
      double s_prev = 0.0;
      for (int k = 1; k <= m; ++k) {
        const double s = dt * k / m;
        if ((total_at(s) > policy.threshold()) != side0) {
          double lo = s_prev, hi = s;
          for (int it = 0; it < 100 && hi - lo > 1e-13 * std::max(1.0, dt); ++it) {
            const double mid = 0.5 * (lo + hi);
            if ((total_at(mid) > policy.threshold()) != side0)
              hi = mid;
            else
              lo = mid;
          }
          dt = hi;  // land strictly on the flipped side
          break;
        }
        s_prev = s;
      }
    }

    if (dt <= t_eps) {
      if (++stall_count > 100)
        throw std::runtime_error("simulate: stalled event loop at state " + fmt_state(q));
    } else {
      stall_count = 0;
    }

    Segment seg;
    seg.t0 = t;
    seg.dt = dt;
    seg.start = q;
    seg.control = plan.form;
    State q_end;
    for (JobClass c : {JobClass::class1, JobClass::class2}) {
      const int i = index(c);
      const auto cs = propagate_class(q.primary(c), q.orbit(c), plan.form[i],
                                      p.r(c), p.gamma(c), p.mu, dt);
      seg.cost[i] = cs.cost;
      seg.served[i] = cs.served;
      q_end.set_primary(c, cs.qp_end);
      q_end.set_orbit(c, cs.qr_end);
    }
    const double band = kZeroBand * std::max(1.0, q.q1p + q.q1r + q.q2p + q.q2r);
    // Event landings sit within the root-finder tolerance of zero; snap them
    // so the next plan sees exact boundary states.
    auto snap = [band](double v) { return std::fabs(v) < std::max(band, 1e-11) ? 0.0 : v; };
    q_end = State{snap(q_end.q1p), q_end.q1r < band ? 0.0 : q_end.q1r,
                  snap(q_end.q2p), q_end.q2r < band ? 0.0 : q_end.q2r};
    seg.end = q_end;
    if (segments.size() >= 200000)
      throw std::runtime_error("simulate: segment budget exceeded");
    segments.push_back(seg);
    q = q_end;
    t += dt;
  }

  if (segments.empty()) {  // zero horizon: record the initial state
    Segment seg;
    seg.t0 = 0.0;
    seg.dt = 0.0;
    seg.start = seg.end = q;
    seg.control = {ControlForm::make_constant(0.0), ControlForm::make_constant(0.0)};
    segments.push_back(seg);
  }
  return Trajectory(std::move(segments), horizon, p);
}

Trajectory propagate_piecewise(const State& q0, const Params& p,
                               std::span<const Allocation> controls,
                               std::span<const double> node_times,
                               double admissibility_slack) {
  if (node_times.size() != controls.size() + 1)
    throw std::invalid_argument("propagate_piecewise: need one more node than cells");
  std::vector<Segment> segments;
  segments.reserve(controls.size());
  State q = q0.clamped();
  for (std::size_t k = 0; k < controls.size(); ++k) {
    const double dt = node_times[k + 1] - node_times[k];
    if (!(dt > 0.0))
      throw std::invalid_argument("propagate_piecewise: node times must increase");
    if (!is_admissible(q, controls[k], p, admissibility_slack))
      throw std::invalid_argument("propagate_piecewise: inadmissible control in cell " +
                                  std::to_string(k) + " at state " + fmt_state(q));
    Segment seg;
    seg.t0 = node_times[k];
    seg.dt = dt;
    seg.start = q;
    seg.control = {ControlForm::make_constant(std::max(0.0, controls[k].u1)),
                   ControlForm::make_constant(std::max(0.0, controls[k].u2))};
    State q_end;
    for (JobClass c : {JobClass::class1, JobClass::class2}) {
      const int i = index(c);
      const auto cs = propagate_class(q.primary(c), q.orbit(c), seg.control[i],
                                      p.r(c), p.gamma(c), p.mu, dt);
      seg.cost[i] = cs.cost;
      seg.served[i] = cs.served;
      q_end.set_primary(c, cs.qp_end);
      q_end.set_orbit(c, cs.qr_end);
    }
    seg.end = q_end;
    segments.push_back(seg);
    q = q_end;
  }
  return Trajectory(std::move(segments), node_times.back(), p);
}

}  // namespace reflux
