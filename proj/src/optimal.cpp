#include "reflux/optimal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "reflux/ipm.hpp"
#include "reflux/kernel.hpp"
#include "reflux/phi.hpp"
#include "reflux/policies.hpp"

namespace reflux {

double SolveConfig::auto_horizon(const Params& p, const State& q0) {
  const double t1 = (q0.q1p + q0.q1r) / ((1.0 - p.r1) * p.mu);
  const double t2 = (q0.q2p + q0.q2r) / ((1.0 - p.r2) * p.mu);
  const double T = 2.0 * (t1 + t2);
  return T > 0.0 ? T : 1.0;
}

double SolveConfig::resolved_horizon(const Params& p, const State& q0) const {
  return horizon > 0.0 ? horizon : auto_horizon(p, q0);
}

namespace {

std::vector<double> uniform_nodes(double T, int n) {
  std::vector<double> nodes(n + 1);
  for (int k = 0; k <= n; ++k) nodes[k] = T * k / n;
  nodes[0] = 0.0;
  nodes[n] = T;
  return nodes;
}

// Interior minimum of q^p within one constant-control cell, in closed form:
// the only interior stationary point solves gamma q^r(t) = mu u.
double cell_interior_min(const Segment& seg, const Params& p) {
  double min_qp = 0.0;
  for (JobClass c : {JobClass::class1, JobClass::class2}) {
    const double u = seg.control[index(c)].level;
    const double r = p.r(c), g = p.gamma(c);
    const double qr0 = seg.start.orbit(c);
    const double denom = qr0 - r * p.mu * u / g;
    const double target = (1.0 - r) * p.mu * u / g;
    if (denom != 0.0) {
      const double ratio = target / denom;
      if (ratio > 0.0 && ratio < 1.0) {
        const double t_star = -std::log(ratio) / g;
        if (t_star > 0.0 && t_star < seg.dt) {
          const double qp = propagate_class(seg.start.primary(c), qr0,
                                            seg.control[index(c)], r, g, p.mu,
                                            t_star)
                                .qp_end;
          min_qp = std::min(min_qp, qp);
        }
      }
    }
    min_qp = std::min(min_qp, std::min(seg.start.primary(c), seg.end.primary(c)));
  }
  return min_qp;
}

std::vector<Allocation> clamp_controls(const std::vector<double>& u1,
                                       const std::vector<double>& u2) {
  std::vector<Allocation> out(u1.size());
  for (std::size_t k = 0; k < u1.size(); ++k) {
    double a = std::clamp(u1[k], 0.0, 1.0);
    double b = std::clamp(u2[k], 0.0, 1.0);
    const double s = a + b;
    if (s > 1.0) {
      a /= s;
      b /= s;
    }
    out[k] = Allocation{a, b};
  }
  return out;
}

}  // namespace

LpInstance transcribe_lp(const Params& p, const State& q0,
                         const SolveConfig& config) {
  if (config.grid_points < 2)
    throw std::invalid_argument("transcribe_lp: grid_points must be >= 2");
  const double T = config.resolved_horizon(p, q0);
  return LpInstance(p, q0, uniform_nodes(T, config.grid_points));
}

OptimalSolution solve_optimal(const Params& p, const State& q0,
                              const SolveConfig& config) {
  if (config.grid_points < 2)
    throw std::invalid_argument("solve_optimal: grid_points must be >= 2");
  const double T = config.resolved_horizon(p, q0);
  std::vector<double> nodes = uniform_nodes(T, config.grid_points);

  IpmOptions iopts;
  iopts.gap_tol = std::min(1e-11, 0.01 * config.lp_tolerance);
  const double dip_tol = 1e-6 * std::max({1.0, q0.q1p, q0.q2p, q0.q1r, q0.q2r});

  IpmResult res;
  std::vector<Allocation> controls;
  Trajectory traj;
  double min_dip = 0.0;
  int rounds = 0;
  for (;; ++rounds) {
    res = solve_staircase_ipm(p, q0, nodes, iopts);
    controls = clamp_controls(res.u1, res.u2);
    traj = propagate_piecewise(q0, p, controls, nodes, /*slack=*/1e-5);

    min_dip = 0.0;
    std::vector<double> extra;
    for (const Segment& seg : traj.segments()) {
      const double m = cell_interior_min(seg, p);
      min_dip = std::min(min_dip, m);
      if (m < -dip_tol) extra.push_back(seg.t0 + 0.5 * seg.dt);
    }
    if (extra.empty() || rounds >= 3) break;
    nodes.insert(nodes.end(), extra.begin(), extra.end());
    std::sort(nodes.begin(), nodes.end());
  }

  OptimalSolution sol{p,
                      std::move(nodes),
                      std::move(controls),
                      std::move(traj),
                      res.objective,
                      0,
                      res.duality_gap,
                      res.iterations,
                      min_dip,
                      rounds};
  sol.switch_count = count_switches(sol);
  return sol;
}

OptimalSolution solution_from_controls(const Params& p, const State& q0,
                                       std::vector<double> node_times,
                                       std::vector<Allocation> controls) {
  Trajectory traj = propagate_piecewise(q0, p, controls, node_times, 1e-6);
  OptimalSolution sol{p,
                      std::move(node_times),
                      std::move(controls),
                      std::move(traj),
                      0.0,
                      0,
                      0.0,
                      0,
                      0.0,
                      0};
  sol.cost = sol.trajectory.accumulated_cost();
  sol.switch_count = count_switches(sol);
  return sol;
}

SingleSwitchResult best_single_switch(const Params& p, const State& q0,
                                      const SolveConfig& config) {
  const double T = config.resolved_horizon(p, q0);
  SingleSwitchResult out;
  out.fp1_cost = simulate(fixed_priority(JobClass::class1), q0, p, T).accumulated_cost();
  out.fp2_cost = simulate(fixed_priority(JobClass::class2), q0, p, T).accumulated_cost();

  bool have = false;
  for (JobClass first : {JobClass::class1, JobClass::class2}) {
    auto cost_at = [&](double ts) {
      return simulate(switch_at_time(first, ts), q0, p, T).accumulated_cost();
    };
    // Coarse scan, then golden-section refinement on the best bracket.
    const int m = 32;
    int best_k = 0;
    double best_f = std::numeric_limits<double>::infinity();
    for (int k = 0; k <= m; ++k) {
      const double f = cost_at(T * k / m);
      if (f < best_f) {
        best_f = f;
        best_k = k;
      }
    }
    double lo = T * std::max(0, best_k - 1) / m;
    double hi = T * std::min(m, best_k + 1) / m;
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
    double f1 = cost_at(x1), f2 = cost_at(x2);
    for (int it = 0; it < 80 && hi - lo > 1e-11 * std::max(1.0, T); ++it) {
      if (f1 <= f2) {
        hi = x2;
        x2 = x1;
        f2 = f1;
        x1 = hi - gr * (hi - lo);
        f1 = cost_at(x1);
      } else {
        lo = x1;
        x1 = x2;
        f1 = f2;
        x2 = lo + gr * (hi - lo);
        f2 = cost_at(x2);
      }
    }
    const double ts = f1 <= f2 ? x1 : x2;
    const double fs = std::min(f1, f2);
    if (!have || fs < out.cost) {
      have = true;
      out.first = first;
      out.t_switch = ts;
      out.cost = fs;
    }
  }
  out.initial_priority =
      out.t_switch <= 1e-9 * std::max(1.0, T) ? other(out.first) : out.first;
  return out;
}

PontryaginCertificate::PontryaginCertificate(const Params& p, double horizon)
    : params_(p), horizon_(horizon) {
  if (!(horizon > 0.0))
    throw std::invalid_argument("PontryaginCertificate: horizon must be > 0");
}

double PontryaginCertificate::costate_p(double t) const { return horizon_ - t; }

double PontryaginCertificate::costate_r(JobClass cls, double t) const {
  const double tau = horizon_ - t;
  const double g = params_.gamma(cls);
  return tau * (1.0 - detail::phi1(g * tau));
}

double PontryaginCertificate::hamiltonian_u_coefficient(JobClass cls,
                                                        double t) const {
  return params_.mu *
         (params_.r(cls) * costate_r(cls, t) - costate_p(t));
}

PontryaginCertificate pontryagin_certificate(const Params& p,
                                             const SolveConfig& config) {
  if (!(config.horizon > 0.0))
    throw std::invalid_argument(
        "pontryagin_certificate: config.horizon must be set explicitly");
  return PontryaginCertificate(p, config.horizon);
}

namespace {

// Per-cell dominant-priority label: 1 or 2 when exactly that class receives
// its maximum admissible allocation, 0 when both or neither do (boundary
// tails and transition cells).
std::vector<int> cell_labels(const OptimalSolution& sol) {
  const Params& p = sol.params;
  const State q0 = sol.trajectory.initial_state();
  const double zb = 1e-9 * std::max({1.0, q0.q1p, q0.q2p, q0.q1r, q0.q2r});
  const double ctol = 1e-5;
  std::vector<int> labels;
  labels.reserve(sol.trajectory.num_segments());
  for (const Segment& seg : sol.trajectory.segments()) {
    bool at_max[2];
    for (JobClass c : {JobClass::class1, JobClass::class2}) {
      const double u = seg.control[index(c)].level;
      double umax = 1.0;
      if (seg.start.primary(c) <= zb) {
        // Cell-average boundary-hold rate: the hold rate decays within the
        // cell by exactly the factor phi1(lambda h).
        const double hold0 = p.gamma(c) * seg.start.orbit(c) / p.mu;
        umax = std::min(1.0, hold0 * detail::phi1(p.lambda(c) * seg.dt));
      }
      at_max[index(c)] = u >= umax - ctol;
    }
    if (at_max[0] == at_max[1])
      labels.push_back(0);
    else
      labels.push_back(at_max[0] ? 1 : 2);
  }
  return labels;
}

}  // namespace

std::vector<std::pair<JobClass, int>> priority_phases(const OptimalSolution& sol) {
  constexpr int kWindow = 5;  // chattering filter: ignore runs shorter than this
  const std::vector<int> labels = cell_labels(sol);

  std::vector<std::pair<int, int>> runs;  // (label, length), neutrals dropped
  for (int lab : labels) {
    if (lab == 0) continue;
    if (!runs.empty() && runs.back().first == lab)
      ++runs.back().second;
    else
      runs.emplace_back(lab, 1);
  }
  std::vector<std::pair<JobClass, int>> kept;
  for (const auto& [lab, len] : runs) {
    if (len < kWindow) continue;
    const JobClass c = lab == 1 ? JobClass::class1 : JobClass::class2;
    if (!kept.empty() && kept.back().first == c)
      kept.back().second += len;
    else
      kept.emplace_back(c, len);
  }
  if (kept.empty() && !runs.empty()) {
    // Degenerate tiny grids: keep the longest run so a priority is reported.
    auto it = std::max_element(runs.begin(), runs.end(),
                               [](const auto& a, const auto& b) {
                                 return a.second < b.second;
                               });
    kept.emplace_back(it->first == 1 ? JobClass::class1 : JobClass::class2,
                      it->second);
  }
  return kept;
}

int count_switches(const OptimalSolution& sol) {
  const auto phases = priority_phases(sol);
  return phases.empty() ? 0 : static_cast<int>(phases.size()) - 1;
}

}  // namespace reflux
