#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "reflux/ipm.hpp"
#include "reflux/kernel.hpp"
#include "reflux/lp.hpp"
#include "reflux/optimal.hpp"
#include "reflux/policies.hpp"

using namespace reflux;

namespace {
Params figure2() { return Params(0.2, 0.8, 2.0, 0.2, 2.0); }

std::vector<double> uniform(double T, int n) {
  std::vector<double> t(n + 1);
  for (int k = 0; k <= n; ++k) t[k] = T * k / n;
  return t;
}

std::vector<Allocation> discretized_policy(const Policy& pol, const State& q0,
                                           const Params& p,
                                           const std::vector<double>& nodes) {
  // Per-cell average controls, recovered exactly from the work balance
  // (q^p + q^r drains at (1-r) mu u); midpoint sampling would let the
  // open-loop path drift off boundary arcs.
  const Trajectory traj = simulate(pol, q0, p, nodes.back());
  std::vector<Allocation> u(nodes.size() - 1);
  for (std::size_t k = 0; k + 1 < nodes.size(); ++k) {
    const State a = traj.state_at(nodes[k]);
    const State b = traj.state_at(nodes[k + 1]);
    const double h = nodes[k + 1] - nodes[k];
    for (JobClass c : {JobClass::class1, JobClass::class2}) {
      const double served = (total_class_work(a, c) - total_class_work(b, c)) /
                            ((1.0 - p.r(c)) * p.mu);
      u[k].set(c, std::clamp(served / h, 0.0, 1.0));
    }
  }
  return u;
}
}  // namespace

TEST_CASE("transcription row and bound counts") {
  const Params p = figure2();
  SolveConfig cfg;
  cfg.horizon = 1.0;
  cfg.grid_points = 2;
  const LpInstance lp = transcribe_lp(p, State{0, 0, 0, 0}, cfg);
  CHECK(lp.num_vars() == 4);
  CHECK(lp.num_bound_pairs() == 4);            // 2n bound pairs
  CHECK(lp.num_cap_rows() == 2);               // n joint-capacity rows
  CHECK(lp.num_state_rows() == 6);             // 2(n+1) state rows
  CHECK(lp.num_rows() == 8);

  // Zero initial state: the only feasible control is u == 0, optimum 0.
  const auto res = solve_bounded_simplex(lp.materialize());
  CHECK(res.status == SimplexResult::Status::optimal);
  CHECK(res.objective == doctest::Approx(0.0).epsilon(1e-12));
  for (double v : res.x) CHECK(v <= 1e-10);
}

TEST_CASE("transcribed objective equals the exact piecewise cost") {
  oracle::Rng rng(77);
  for (int i = 0; i < 10; ++i) {
    const Params p = oracle::random_params(rng);
    const State q0 = oracle::random_state(rng, 3.0, 0.2);
    const int n = 24;
    SolveConfig cfg;
    cfg.horizon = rng.uni(2.0, 10.0);
    cfg.grid_points = n;
    const LpInstance lp = transcribe_lp(p, q0, cfg);

    // Any feasible control path: here a damped pattern.
    std::vector<Allocation> u(n);
    for (int k = 0; k < n; ++k) {
      u[k].u1 = 0.7 * rng.uni(0, 1);
      u[k].u2 = rng.uni(0, 1.0 - u[k].u1);
    }
    if (lp.max_violation(u) > 0.0) continue;  // crossed a queue boundary
    const Trajectory traj = propagate_piecewise(q0, p, u, lp.node_times());
    CHECK(lp.objective_value(u) ==
          doctest::Approx(traj.accumulated_cost()).epsilon(1e-11));
    // Node states agree as well (kernel route vs propagation route).
    for (int k = 0; k <= n; k += 6) {
      const State s = traj.state_at(lp.node_times()[k]);
      CHECK(lp.primary_at_node(JobClass::class1, k, u) ==
            doctest::Approx(s.q1p).epsilon(1e-9));
    }
  }
}

TEST_CASE("discretized fixed-priority objective approaches the exact cost") {
  const Params p = figure2();
  const State q0{2, 0, 2, 0};
  const double T = 12.5;
  const double exact =
      simulate(fixed_priority(JobClass::class1), q0, p, T).accumulated_cost();
  double prev_gap = 1e9;
  for (int n : {50, 100, 200}) {
    const auto nodes = uniform(T, n);
    const auto u = discretized_policy(fixed_priority(JobClass::class1), q0, p, nodes);
    const LpInstance lp(p, q0, nodes);
    const double gap = std::fabs(lp.objective_value(u) - exact);
    CHECK(gap < prev_gap + 1e-12);
    prev_gap = gap;
  }
  CHECK(prev_gap < 2e-3 * exact);
}

TEST_CASE("simplex reproduces independently computed optima") {
  struct Case {
    Params p;
    State q0;
    double T;
    int n;
    double want;
  };
  // Expected values from tests/oracles/lp_reference.py (scipy HiGHS on an
  // independent rebuild of the same discretization).
  const Case cases[] = {
      {figure2(), State{2, 0, 2, 0}, 12.5, 60, 4.533929021085},
      {Params(0.2, 0.8, 1.0, 1.0, 1.0), State{1, 0.5, 2, 0.3}, 26.75, 80,
       11.198284406152},
      {Params(0.35, 0.7, 1.5, 0.4, 1.2), State{0.8, 0.2, 1.5, 0.0}, 18.0, 48,
       3.141808430334},
  };
  for (const Case& c : cases) {
    const LpInstance lp(c.p, c.q0, uniform(c.T, c.n));
    const auto res = solve_bounded_simplex(lp.materialize());
    REQUIRE(res.status == SimplexResult::Status::optimal);
    CHECK(res.objective == doctest::Approx(c.want).epsilon(1e-8));

    const auto ipm = solve_staircase_ipm(c.p, c.q0, lp.node_times());
    CHECK(ipm.status == IpmResult::Status::converged);
    CHECK(ipm.objective == doctest::Approx(c.want).epsilon(1e-7));
  }
}

TEST_CASE("simplex and interior point agree on random small instances") {
  oracle::Rng rng(55);
  for (int i = 0; i < 6; ++i) {
    const Params p = oracle::random_params(rng);
    const State q0 = oracle::random_state(rng, 3.0, 0.25);
    const double T = SolveConfig::auto_horizon(p, q0);
    const int n = 40;
    const LpInstance lp(p, q0, uniform(T, n));
    const auto sx = solve_bounded_simplex(lp.materialize());
    REQUIRE(sx.status == SimplexResult::Status::optimal);
    const auto ipm = solve_staircase_ipm(p, q0, lp.node_times());
    const double scale = std::max(1.0, std::fabs(sx.objective));
    CHECK(std::fabs(ipm.objective - sx.objective) < 1e-7 * scale);
  }
}

TEST_CASE("solve_optimal: fixed-priority regime reproduces FP-1") {
  oracle::Rng rng(21);
  for (int i = 0; i < 4; ++i) {
    const Params p = oracle::random_params_fp_regime(rng);
    const State q0 = oracle::random_state(rng, 5.0, 0.0);
    SolveConfig cfg;
    cfg.grid_points = 800;
    const OptimalSolution sol = solve_optimal(p, q0, cfg);
    const double fp1 =
        simulate(fixed_priority(JobClass::class1), q0, p,
                 cfg.resolved_horizon(p, q0))
            .accumulated_cost();
    CHECK(std::fabs(sol.cost - fp1) / fp1 < 2e-3);
  }
}

TEST_CASE("solve_optimal: state-dependent regime strictly beats both FPs") {
  const Params p = figure2();
  const State q0{2, 0, 2, 0};
  SolveConfig cfg;
  cfg.grid_points = 500;
  const OptimalSolution sol = solve_optimal(p, q0, cfg);
  const double T = cfg.resolved_horizon(p, q0);
  const double fp1 = simulate(fixed_priority(JobClass::class1), q0, p, T).accumulated_cost();
  const double fp2 = simulate(fixed_priority(JobClass::class2), q0, p, T).accumulated_cost();
  CHECK(sol.cost < std::min(fp1, fp2) - 1e-3);
  CHECK(sol.cost >= 0.0);
  CHECK(sol.switch_count <= 1);
  CHECK(sol.min_intracell_dip > -1e-6);

  // Zero initial state solves to zero cost.
  SolveConfig tiny;
  tiny.grid_points = 16;
  tiny.horizon = 1.0;
  CHECK(solve_optimal(p, State{}, tiny).cost == doctest::Approx(0.0).epsilon(1e-10));
}

TEST_CASE("optimality sandwich and grid refinement") {
  oracle::Rng rng(61);
  for (int i = 0; i < 3; ++i) {
    const Params p = i == 0 ? figure2() : oracle::random_params(rng);
    const State q0 = oracle::random_state(rng, 3.0, 0.0);
    SolveConfig cfg;
    cfg.grid_points = 250;
    const double T = cfg.resolved_horizon(p, q0);
    const OptimalSolution sol = solve_optimal(p, q0, cfg);
    const double fp1 = simulate(fixed_priority(JobClass::class1), q0, p, T).accumulated_cost();
    const double fp2 = simulate(fixed_priority(JobClass::class2), q0, p, T).accumulated_cost();
    const SingleSwitchResult sw = best_single_switch(p, q0, cfg);
    const double scale = std::max(1.0, fp1);
    // The grid restriction can cost O(h^2) above an exact continuum policy.
    CHECK(sol.cost <= std::min({fp1, fp2, sw.cost}) + 3e-3 * scale);
    CHECK(sol.cost >= -1e-12);

    SolveConfig fine = cfg;
    fine.grid_points = 500;
    const OptimalSolution sol2 = solve_optimal(p, q0, fine);
    CHECK(sol2.cost <= sol.cost + 1e-9 * scale);
  }
}

TEST_CASE("doubling the horizon leaves the optimum unchanged") {
  const Params p = figure2();
  const State q0{2, 0, 2, 0};
  SolveConfig a;
  a.grid_points = 400;
  a.horizon = 12.5;
  SolveConfig b;
  b.grid_points = 800;  // same cell width, doubled horizon
  b.horizon = 25.0;
  const double ca = solve_optimal(p, q0, a).cost;
  const double cb = solve_optimal(p, q0, b).cost;
  CHECK(std::fabs(ca - cb) < 2e-5 * std::max(1.0, ca));
}

TEST_CASE("best single switch") {
  SolveConfig cfg;
  cfg.grid_points = 400;

  // kappa1 <= kappa2: the search degenerates to FP-1.
  const Params fp(0.2, 0.8, 1.0, 1.0, 1.0);
  const State q0{1.5, 0, 1.5, 0};
  const SingleSwitchResult r1 = best_single_switch(fp, q0, cfg);
  CHECK(std::fabs(r1.cost - r1.fp1_cost) < 1e-6 * r1.fp1_cost);

  // Light load under kappa1 > kappa2: class 2 is prioritized from the start.
  const SingleSwitchResult r2 =
      best_single_switch(figure2(), State{0.01, 0, 0.01, 0}, cfg);
  CHECK(r2.initial_priority == JobClass::class2);
  CHECK(r2.cost <= r2.fp2_cost + 1e-12);
  CHECK(r2.fp2_cost < r2.fp1_cost);

  // Heavy-ish symmetric load: a genuine interior switch, close to the LP.
  const SingleSwitchResult r3 = best_single_switch(figure2(), State{2, 0, 2, 0}, cfg);
  const OptimalSolution lp = solve_optimal(figure2(), State{2, 0, 2, 0}, cfg);
  CHECK(r3.initial_priority == JobClass::class1);
  // The exact switching policy can undercut the discretized optimum by the
  // grid restriction overhead, never by more.
  CHECK(r3.cost >= lp.cost - 2e-3 * lp.cost);
  CHECK(std::fabs(r3.cost - lp.cost) / lp.cost < 5e-3);
}

TEST_CASE("pontryagin certificate") {
  const Params p = figure2();
  SolveConfig cfg;
  cfg.horizon = 7.0;
  const PontryaginCertificate cert = pontryagin_certificate(p, cfg);

  // Terminal conditions.
  CHECK(cert.costate_p(7.0) == 0.0);
  CHECK(cert.costate_r(JobClass::class1, 7.0) == 0.0);
  CHECK(cert.costate_r(JobClass::class2, 7.0) == 0.0);

  // Direct substitution at t = 0, T = 1, gamma = 2.
  const Params g2(0.2, 0.8, 2.0, 2.0, 1.0);
  const PontryaginCertificate c1(g2, 1.0);
  CHECK(c1.costate_r(JobClass::class1, 0.0) ==
        doctest::Approx(1.0 - 0.5 * (1.0 - std::exp(-2.0))).epsilon(1e-15));

  // The control coefficient in the Hamiltonian is exactly K_i(T - t).
  oracle::Rng rng(9);
  for (int i = 0; i < 100; ++i) {
    const double t = rng.uni(0.0, 7.0);
    for (JobClass cls : {JobClass::class1, JobClass::class2}) {
      const double lhs = cert.hamiltonian_u_coefficient(cls, t);
      const double rhs = kernel_K(p, cls, 7.0 - t);
      CHECK(std::fabs(lhs - rhs) <= 1e-12 * std::max(1.0, std::fabs(rhs)));
    }
  }

  SolveConfig no_horizon;
  CHECK_THROWS_AS(pontryagin_certificate(p, no_horizon), std::invalid_argument);
}

TEST_CASE("switch counting with the chattering filter") {
  const Params p = figure2();
  const State q0{2, 0, 2, 0};
  // Horizon short enough that T/2 falls inside the busy period (class 1
  // clears around t ~ 1.1); a switch after full drain would be invisible.
  const double T = 2.0;
  const auto nodes = uniform(T, 200);

  const auto fp_controls =
      discretized_policy(fixed_priority(JobClass::class1), q0, p, nodes);
  CHECK(count_switches(solution_from_controls(p, q0, nodes, fp_controls)) == 0);

  const auto sw_controls =
      discretized_policy(switch_at_time(JobClass::class1, T / 2), q0, p, nodes);
  const auto sw_sol = solution_from_controls(p, q0, nodes, sw_controls);
  CHECK(count_switches(sw_sol) == 1);
  const auto phases = priority_phases(sw_sol);
  REQUIRE(phases.size() == 2);
  CHECK(phases[0].first == JobClass::class1);
  CHECK(phases[1].first == JobClass::class2);

  SolveConfig cfg;
  cfg.grid_points = 500;
  const OptimalSolution lp = solve_optimal(p, q0, cfg);
  CHECK(lp.switch_count <= 1);
}
