// Stable evaluation of the exponential integrals that appear in closed-form
// segment propagation, cost integrals, and kernel antiderivatives:
//
//   phi1(x) = (1 - e^-x) / x                      -> 1    as x -> 0
//   phi2(x) = (x - 1 + e^-x) / x^2                -> 1/2
//   phi3(x) = (x^2/2 - x + 1 - e^-x) / x^3        -> 1/6
//   psi2(x) = (1 - (1+x) e^-x) / x^2              -> 1/2   (= int_0^1 t e^{-xt} dt)
//   sinhc(x) = sinh(x) / x                        -> 1
//
// Direct formulas lose relative accuracy near 0 (catastrophic cancellation),
// so small arguments switch to the series  phi_n(x) = sum_k (-x)^k / (k+n)!.
#pragma once

#include <cmath>

namespace reflux::detail {

inline constexpr double kPhiSeriesCutoff = 0.75;

inline double phi_series(int n, double x) {
  // sum_{k>=0} (-x)^k / (k+n)!
  double fact = 1.0;
  for (int i = 2; i <= n; ++i) fact *= i;
  double term = 1.0 / fact;
  double sum = term;
  for (int k = 1; k < 40; ++k) {
    term *= -x / static_cast<double>(k + n);
    sum += term;
    if (std::fabs(term) < 1e-20 * std::fabs(sum)) break;
  }
  return sum;
}

inline double phi1(double x) {
  if (x == 0.0) return 1.0;
  return -std::expm1(-x) / x;
}

inline double phi2(double x) {
  if (std::fabs(x) < kPhiSeriesCutoff) return phi_series(2, x);
  return (x + std::expm1(-x)) / (x * x);
}

inline double phi3(double x) {
  if (std::fabs(x) < kPhiSeriesCutoff) return phi_series(3, x);
  return (0.5 * x * x - x - std::expm1(-x)) / (x * x * x);
}

inline double psi2(double x) {
  if (std::fabs(x) < kPhiSeriesCutoff) {
    // sum_{k>=0} (-1)^k (k+1) x^k / (k+2)!
    double term = 0.5;
    double sum = term;
    for (int k = 1; k < 40; ++k) {
      term *= -x * static_cast<double>(k + 1) / (static_cast<double>(k) * (k + 2));
      sum += term;
      if (std::fabs(term) < 1e-20 * std::fabs(sum)) break;
    }
    return sum;
  }
  return (1.0 - (1.0 + x) * std::exp(-x)) / (x * x);
}

// d/dx phi2(x) = (2 - x - (x+2) e^-x) / x^3, series value -1/6 at 0.
inline double phi2_prime(double x) {
  if (std::fabs(x) < kPhiSeriesCutoff) {
    // sum_{j>=0} (-1)^{j+1} (j+1) x^j / (j+3)!
    double term = -1.0 / 6.0;
    double sum = term;
    for (int j = 1; j < 40; ++j) {
      term *= -x * static_cast<double>(j + 1) / (static_cast<double>(j) * (j + 3));
      sum += term;
      if (std::fabs(term) < 1e-20 * std::fabs(sum)) break;
    }
    return sum;
  }
  return (2.0 - x - (x + 2.0) * std::exp(-x)) / (x * x * x);
}

inline double sinhc(double x) {
  if (std::fabs(x) < 1e-5) return 1.0 + x * x / 6.0;
  return std::sinh(x) / x;
}

// Divided difference (phi1(a) - phi1(b)) / (a - b); stable for a ~ b via the
// derivative phi1'(x) = -psi2(x).
inline double dd_phi1(double a, double b) {
  if (std::fabs(a - b) <= 1e-6 * (1.0 + std::fabs(a) + std::fabs(b)))
    return -psi2(0.5 * (a + b));
  return (phi1(a) - phi1(b)) / (a - b);
}

inline double dd_phi2(double a, double b) {
  if (std::fabs(a - b) <= 1e-6 * (1.0 + std::fabs(a) + std::fabs(b)))
    return phi2_prime(0.5 * (a + b));
  return (phi2(a) - phi2(b)) / (a - b);
}

/// E_gamma(dt) = int_0^dt e^{-gamma s} ds = (1 - e^{-gamma dt}) / gamma.
inline double exp_integral(double gamma, double dt) { return dt * phi1(gamma * dt); }

/// G_gamma(dt) = int_0^dt (1 - e^{-gamma s}) ds = dt - E_gamma(dt).
inline double one_minus_exp_integral(double gamma, double dt) {
  return gamma * dt * dt * phi2(gamma * dt);
}

/// int_0^dt G_gamma(s) ds = dt^2/2 - G_gamma(dt)/gamma = gamma dt^3 phi3(gamma dt).
inline double double_integral(double gamma, double dt) {
  return gamma * dt * dt * dt * phi3(gamma * dt);
}

/// (e^{-a} - e^{-b}) / (b - a), stable for a ~ b (both nonnegative).
inline double exp_difference_quotient(double a, double b) {
  // Far-apart arguments: no cancellation, and the sinh form would overflow.
  if (std::fabs(b - a) > 1.0) return (std::exp(-a) - std::exp(-b)) / (b - a);
  return std::exp(-0.5 * (a + b)) * sinhc(0.5 * (b - a));
}

}  // namespace reflux::detail
