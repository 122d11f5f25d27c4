#include "reflux/kernel.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "reflux/phi.hpp"

namespace reflux {

double kernel_k(const Params& p, JobClass cls, double tau) {
  if (!(tau >= 0.0)) throw std::invalid_argument("kernel_k: tau must be >= 0");
  const double r = p.r(cls);
  return p.mu * ((r - 1.0) - r * std::exp(-p.gamma(cls) * tau));
}

double kernel_K(const Params& p, JobClass cls, double tau) {
  if (!(tau >= 0.0)) throw std::invalid_argument("kernel_K: tau must be >= 0");
  const double r = p.r(cls);
  // (1 - e^{-gamma tau})/gamma written as tau*phi1 to stay exact near 0.
  return p.mu * ((r - 1.0) * tau - r * tau * detail::phi1(p.gamma(cls) * tau));
}

double kernel_K_antiderivative(const Params& p, JobClass cls, double tau) {
  if (!(tau >= 0.0))
    throw std::invalid_argument("kernel_K_antiderivative: tau must be >= 0");
  const double r = p.r(cls);
  const double g = p.gamma(cls);
  const double G = g * tau * tau * detail::phi2(g * tau);  // tau - (1-e^{-g tau})/g
  return p.mu * (0.5 * (r - 1.0) * tau * tau - (r / g) * G);
}

namespace {

// int_{t0}^{t0+dt} u(s) K(T - s) ds for one class, u(t0 + s) = c + d e^{-lam s}.
double segment_control_cost(const Params& p, JobClass cls, double T, double t0,
                            double dt, double c, double d, double lam) {
  using namespace detail;
  if (dt <= 0.0) return 0.0;
  const double tau0 = T - t0;  // time-to-horizon at segment start (>= dt)
  double out = 0.0;
  if (c != 0.0)
    out += c * (kernel_K_antiderivative(p, cls, tau0) -
                kernel_K_antiderivative(p, cls, std::max(0.0, tau0 - dt)));
  if (d != 0.0) {
    if (lam == 0.0) {
      out += d * (kernel_K_antiderivative(p, cls, tau0) -
                  kernel_K_antiderivative(p, cls, std::max(0.0, tau0 - dt)));
      return out;
    }
    const double r = p.r(cls);
    const double g = p.gamma(cls);
    const double xl = lam * dt;
    // S = int_0^dt e^{-lam s} e^{-gamma (tau0 - s)} ds, kept stable for
    // gamma ~ lam and for large gamma tau0.
    const double A = g * (tau0 - dt) + lam * dt;
    const double B = g * tau0;
    const double S = dt * exp_difference_quotient(A, B);
    const double J = p.mu * (r - 1.0) * (tau0 * dt * phi1(xl) - dt * dt * psi2(xl)) -
                     (p.mu * r / g) * (dt * phi1(xl) - S);
    out += d * J;
  }
  return out;
}

}  // namespace

CostDecomposition cost_via_kernel(const Trajectory& traj, const State& q0,
                                  const Params& p, double horizon) {
  const double htol = 1e-9 * std::max(1.0, horizon);
  if (std::fabs(traj.horizon() - horizon) > htol)
    throw std::invalid_argument("cost_via_kernel: horizon mismatch");
  const State start = traj.initial_state();
  const double stol =
      1e-9 * std::max(1.0, q0.q1p + q0.q1r + q0.q2p + q0.q2r);
  if (std::fabs(start.q1p - q0.q1p) > stol || std::fabs(start.q1r - q0.q1r) > stol ||
      std::fabs(start.q2p - q0.q2p) > stol || std::fabs(start.q2r - q0.q2r) > stol)
    throw std::invalid_argument("cost_via_kernel: trajectory does not start at q0");

  CostDecomposition out;
  for (JobClass cls : {JobClass::class1, JobClass::class2}) {
    const double g = p.gamma(cls);
    // int_0^T [q0p + (1 - e^{-gamma t}) q0r] dt
    out.constant_part += q0.primary(cls) * horizon +
                         q0.orbit(cls) * g * horizon * horizon * detail::phi2(g * horizon);
  }

  double control = 0.0, comp = 0.0;
  for (const Segment& seg : traj.segments()) {
    for (JobClass cls : {JobClass::class1, JobClass::class2}) {
      const ControlForm& f = seg.control[index(cls)];
      double c = f.level, d = f.coeff, lam = f.rate;
      if (f.mode == ControlForm::Mode::constant) {
        d = 0.0;
        lam = 0.0;
      }
      // hold mode already stores u(s) = coeff e^{-rate s} in its fields
      const double add = segment_control_cost(p, cls, horizon, seg.t0, seg.dt,
                                              c, d, lam) -
                         comp;
      const double next = control + add;
      comp = (next - control) - add;
      control = next;
    }
  }
  out.control_part = control;
  out.total = out.constant_part + out.control_part;
  return out;
}

Lemma1Report lemma1_check(const Params& p, std::span<const double> tau_grid) {
  Lemma1Report rep;
  double max_k = -std::numeric_limits<double>::infinity();
  double max_gap = -std::numeric_limits<double>::infinity();
  for (double tau : tau_grid) {
    const double k1 = kernel_K(p, JobClass::class1, tau);
    const double k2 = kernel_K(p, JobClass::class2, tau);
    max_k = std::max(max_k, std::max(k1, k2));
    max_gap = std::max(max_gap, k1 - k2);
  }
  rep.max_kernel_value = max_k;
  rep.max_dominance_violation = max_gap;
  rep.all_nonpositive = max_k <= 1e-12;
  if (p.kappa(JobClass::class1) <= p.kappa(JobClass::class2))
    rep.dominance_holds = max_gap <= 1e-12;
  return rep;
}

std::vector<double> default_lemma1_grid(const Params& p) {
  const double tau_max = 100.0 / std::min(p.gamma1, p.gamma2);
  const int n = 10000;
  std::vector<double> grid(n);
  for (int i = 0; i < n; ++i) grid[i] = tau_max * i / (n - 1);
  return grid;
}

}  // namespace reflux
