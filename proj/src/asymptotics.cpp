#include "reflux/asymptotics.hpp"

#include <cmath>
#include <stdexcept>

#include "reflux/phi.hpp"

namespace reflux {

namespace {

// Bisection to machine precision on a bracket with f(lo) <= 0 <= f(hi).
template <typename F>
double bisect_machine(const F& f, double lo, double hi) {
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (f(mid) <= 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

double clearance_time(const Params& p, JobClass cls, double eps) {
  if (!(eps >= 0.0)) throw std::invalid_argument("clearance_time: eps must be >= 0");
  if (eps == 0.0) return 0.0;
  const double r = p.r(cls);
  const double g = p.gamma(cls);
  // (r/gamma)(1 - e^{-gamma t}) written as r t phi1(gamma t).
  auto residual = [&](double t) {
    return p.mu * ((1.0 - r) * t + r * t * detail::phi1(g * t)) - eps;
  };
  double lo = eps / p.mu;
  double hi = eps / ((1.0 - r) * p.mu);
  // The root lies in [x, x/(1-r)]; nudge the bracket for rounding slack.
  lo *= 1.0 - 1e-12;
  hi *= 1.0 + 1e-12;
  return bisect_machine(residual, lo, hi);
}

double clearance_cost_integral(const Params& p, JobClass cls, double eps) {
  const double t = clearance_time(p, cls, eps);
  const double r = p.r(cls);
  const double g = p.gamma(cls);
  // I = eps t - (1-r) mu t^2/2 - (r mu / g)(t - (1 - e^{-g t})/g)
  return eps * t - 0.5 * (1.0 - r) * p.mu * t * t -
         r * p.mu * t * t * detail::phi2(g * t);
}

FixedPriorityBreakdown breakdown(const Params& p, JobClass prioritized, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("breakdown: eps must be > 0");
  using namespace detail;
  const JobClass jc = other(prioritized);
  const double ri = p.r(prioritized), gi = p.gamma(prioritized);
  const double rj = p.r(jc), gj = p.gamma(jc);
  const double mu = p.mu;
  const double x = eps / mu;

  FixedPriorityBreakdown b;
  b.prioritized_class = prioritized;
  b.epsilon = eps;
  b.t_i = clearance_time(p, prioritized, eps);
  // r_i (1 - e^{-gamma_i t_i}); clamp the last-ulp excess at saturation.
  b.a_i = std::min(ri * gi * b.t_i * phi1(gi * b.t_i), ri);
  b.lambda_i = (1.0 - ri) * gi;
  b.cost_stage_a = clearance_cost_integral(p, prioritized, eps) + eps * b.t_i;

  const double ai = b.a_i;
  const double li = b.lambda_i;

  // Return queue of the other class during stage B, as a function of the
  // elapsed stage-B time; (e^{-li d} - e^{-gj d})/(gj - li) stays stable
  // through the removable gamma_j == lambda_i coincidence.
  auto qjr_at = [&](double d) {
    return rj * mu * d * phi1(gj * d) -
           rj * mu * ai * d * exp_difference_quotient(li * d, gj * d);
  };
  // Served-capacity balance over stage B; its unique root is delta_j.
  auto residual = [&](double d) {
    return d - ai * d * phi1(li * d) - (eps - qjr_at(d)) / ((1.0 - rj) * mu);
  };

  double hi = 2.0 * x / ((1.0 - rj) * (1.0 - ai));
  int expand = 0;
  while (residual(hi) < 0.0 && expand++ < 60) hi *= 2.0;
  b.delta_j = bisect_machine(residual, 0.0, hi);
  b.qjr_end = qjr_at(b.delta_j);

  const double d = b.delta_j;
  b.cost_stage_b = eps * d - 0.5 * (1.0 - rj) * mu * d * d +
                   (1.0 - rj) * mu * ai * d * d * phi2(li * d) -
                   rj * mu * d * d * phi2(gj * d) -
                   rj * mu * ai * d * d * dd_phi1(li * d, gj * d);
  b.total = b.cost_stage_a + b.cost_stage_b;
  return b;
}

SmallEpsPrediction small_eps_prediction(const Params& p, JobClass prioritized,
                                        double eps) {
  if (!(eps > 0.0))
    throw std::invalid_argument("small_eps_prediction: eps must be > 0");
  const JobClass jc = other(prioritized);
  const double ki = p.kappa(prioritized);
  const double kj = p.kappa(jc);
  const double x = eps / p.mu;
  SmallEpsPrediction out;
  out.stage_a = p.mu * (1.5 * x * x + (2.0 / 3.0) * ki * x * x * x);
  out.stage_b = p.mu * (0.5 * x * x + (0.5 * ki + kj / 6.0) * x * x * x);
  out.total = out.stage_a + out.stage_b;
  return out;
}

double large_eps_prediction(const Params& p, JobClass prioritized, double eps) {
  if (!(eps > 0.0))
    throw std::invalid_argument("large_eps_prediction: eps must be > 0");
  const double ri = p.r(prioritized);
  const double rj = p.r(other(prioritized));
  return (eps * eps / p.mu) * (1.5 / (1.0 - ri) + 0.5 / (1.0 - rj));
}

double clearance_time_series(const Params& p, JobClass cls, double eps) {
  const double r = p.r(cls), g = p.gamma(cls);
  const double x = eps / p.mu;
  return x + 0.5 * r * g * x * x + g * g * r * (3.0 * r - 1.0) * x * x * x / 6.0;
}

double stage_b_length_series(const Params& p, JobClass prioritized, double eps) {
  const double ki = p.kappa(prioritized);
  const double kj = p.kappa(other(prioritized));
  const double x = eps / p.mu;
  return x + (ki + 0.5 * kj) * x * x;
}

}  // namespace reflux
