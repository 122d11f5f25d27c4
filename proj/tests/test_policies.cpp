#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "reflux/dynamics.hpp"
#include "reflux/policies.hpp"

using namespace reflux;

namespace {
Params figure2() { return Params(0.2, 0.8, 2.0, 0.2, 2.0); }

bool segments_bitwise_equal(const Trajectory& a, const Trajectory& b) {
  if (a.num_segments() != b.num_segments()) return false;
  for (std::size_t i = 0; i < a.num_segments(); ++i) {
    const Segment &sa = a.segments()[i], &sb = b.segments()[i];
    if (sa.t0 != sb.t0 || sa.dt != sb.dt) return false;
    if (sa.start.q1p != sb.start.q1p || sa.start.q1r != sb.start.q1r ||
        sa.start.q2p != sb.start.q2p || sa.start.q2r != sb.start.q2r)
      return false;
    if (sa.cost[0] != sb.cost[0] || sa.cost[1] != sb.cost[1]) return false;
  }
  return true;
}
}  // namespace

TEST_CASE("fixed priority allocation rule") {
  const Params p = figure2();
  const Policy fp1 = fixed_priority(JobClass::class1);
  const Policy fp2 = fixed_priority(JobClass::class2);

  const Allocation a1 = fp1.allocation_at(State{1, 0, 1, 0}, p, 0.0);
  CHECK(a1.u1 == 1.0);
  CHECK(a1.u2 == 0.0);

  // Boundary-holding plus leftover to the other class.
  const Allocation a2 = fp1.allocation_at(State{0, 0.5, 1, 0}, p, 0.0);
  CHECK(a2.u1 == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(a2.u2 == doctest::Approx(0.5).epsilon(1e-15));

  // FP-2 with class 2 completely empty frees all capacity to class 1.
  const Allocation a3 = fp2.allocation_at(State{1, 0, 0, 0}, p, 0.0);
  CHECK(a3.u1 == 1.0);
  CHECK(a3.u2 == 0.0);
}

TEST_CASE("policies always produce admissible allocations") {
  oracle::Rng rng(99);
  int checked = 0;
  for (int i = 0; i < 10000; ++i) {
    const Params p = oracle::random_params(rng);
    const State s = oracle::random_state(rng, 5.0, 0.35);
    Policy pol = fixed_priority(JobClass::class1);
    switch (rng.pick(4)) {
      case 0: pol = fixed_priority(JobClass::class1); break;
      case 1: pol = fixed_priority(JobClass::class2); break;
      case 2: pol = switch_at_time(JobClass::class1, rng.uni(0, 5)); break;
      default: pol = switch_on_curve(JobClass::class1, rng.uni(0, 4)); break;
    }
    const double t = rng.uni(0, 10);
    const Allocation u = pol.allocation_at(s, p, t);
    REQUIRE(is_admissible(s, u, p, 1e-12));
    ++checked;
  }
  CHECK(checked == 10000);
}

TEST_CASE("switch at time zero equals the other fixed priority, bitwise") {
  const Params p = figure2();
  oracle::Rng rng(3);
  for (int i = 0; i < 5; ++i) {
    const State q0 = oracle::random_state(rng, 3.0, 0.3);
    const double T = 8.0;
    const Trajectory a = simulate(switch_at_time(JobClass::class1, 0.0), q0, p, T);
    const Trajectory b = simulate(fixed_priority(JobClass::class2), q0, p, T);
    CHECK(segments_bitwise_equal(a, b));
  }
}

TEST_CASE("switch beyond the horizon equals the first fixed priority") {
  const Params p = figure2();
  const State q0{2, 0, 2, 0};
  const double T = 12.5;
  const Trajectory a = simulate(switch_at_time(JobClass::class1, 2.0 * T), q0, p, T);
  const Trajectory b = simulate(fixed_priority(JobClass::class1), q0, p, T);
  CHECK(segments_bitwise_equal(a, b));
}

TEST_CASE("priority_of") {
  const Params p = figure2();
  (void)p;
  const Policy fp1 = fixed_priority(JobClass::class1);
  CHECK(priority_of(fp1, State{3, 1, 2, 0}, 0.0) == JobClass::class1);
  CHECK(priority_of(fp1, State{0, 0, 5, 5}, 100.0) == JobClass::class1);

  const Policy sw = switch_at_time(JobClass::class1, 3.0);
  CHECK(priority_of(sw, State{1, 0, 1, 0}, 5.0) == JobClass::class2);
  CHECK(priority_of(sw, State{1, 0, 1, 0}, 2.0) == JobClass::class1);

  CHECK(!priority_of(fp1, State{}, 1.0).has_value());
}

TEST_CASE("FP-i keeps its primary queue nonincreasing, then pinned at zero") {
  oracle::Rng rng(31);
  for (int i = 0; i < 20; ++i) {
    const Params p = oracle::random_params(rng);
    const State q0 = oracle::random_state(rng, 4.0, 0.2);
    const JobClass cls = rng.pick(2) == 0 ? JobClass::class1 : JobClass::class2;
    const Trajectory t = simulate(fixed_priority(cls), q0, p, rng.uni(2.0, 15.0));
    double prev = q0.primary(cls);
    bool hit_zero = false;
    for (const Segment& seg : t.segments()) {
      const double cur = seg.start.primary(cls);
      if (!hit_zero) {
        CHECK(cur <= prev + 1e-9);
        if (cur == 0.0) hit_zero = true;
      } else if (p.gamma(cls) * seg.start.orbit(cls) <= p.mu) {
        CHECK(cur == 0.0);  // boundary is held once feasible
      }
      prev = cur;
    }
  }
}

TEST_CASE("a single switch can beat both fixed priorities") {
  const Params p = figure2();  // kappa1 > kappa2
  const State q0{2, 0, 2, 0};
  const double T = 12.5;
  const double fp1 = simulate(fixed_priority(JobClass::class1), q0, p, T).accumulated_cost();
  const double fp2 = simulate(fixed_priority(JobClass::class2), q0, p, T).accumulated_cost();
  double best = std::min(fp1, fp2);
  for (int k = 1; k < 64; ++k) {
    const double ts = T * k / 64.0;
    best = std::min(best, simulate(switch_at_time(JobClass::class1, ts), q0, p, T)
                              .accumulated_cost());
  }
  CHECK(best < std::min(fp1, fp2) - 1e-6);
}

TEST_CASE("threshold-curve policy switches when total backlog falls through") {
  const Params p = figure2();
  const State q0{2, 0, 2, 0};
  const Policy pol = switch_on_curve(JobClass::class1, 1.5);
  const Trajectory t = simulate(pol, q0, p, 12.5);
  // Early: class 1 prioritized (heavy); late: class 2.
  CHECK(pol.nominal_priority(t.state_at(0.05), 0.05) == JobClass::class1);
  const State late = t.state_at(12.0);
  CHECK(late.q1p + late.q2p <= 1.5 + 1e-9);
  CHECK(pol.nominal_priority(late, 12.0) == JobClass::class2);
  // The crossing lands a breakpoint where the total equals the threshold.
  bool found = false;
  for (const Segment& seg : t.segments()) {
    if (std::fabs(seg.start.q1p + seg.start.q2p - 1.5) < 1e-9) found = true;
  }
  CHECK(found);
}
