// Model constants for the two-class reentrant fluid system and the
// priority-regime classification derived from the effective return rates.
#pragma once

#include <stdexcept>

namespace reflux {

enum class JobClass : int { class1 = 0, class2 = 1 };

constexpr JobClass other(JobClass c) {
  return c == JobClass::class1 ? JobClass::class2 : JobClass::class1;
}
constexpr int index(JobClass c) { return static_cast<int>(c); }
constexpr int label(JobClass c) { return static_cast<int>(c) + 1; }

/// The five system constants: return probabilities r1 < r2, return rates
/// gamma1, gamma2, and the total service capacity mu.  Validation is strict
/// at construction; every downstream formula divides by gamma_i and (1-r_i).
struct Params {
  double r1;
  double r2;
  double gamma1;
  double gamma2;
  double mu;

  Params(double r1_, double r2_, double gamma1_, double gamma2_, double mu_)
      : r1(r1_), r2(r2_), gamma1(gamma1_), gamma2(gamma2_), mu(mu_) {
    if (!(r1 > 0.0 && r2 > r1 && r2 < 1.0))
      throw std::invalid_argument("Params: need 0 < r1 < r2 < 1");
    if (!(gamma1 > 0.0) || !(gamma2 > 0.0))
      throw std::invalid_argument("Params: need gamma1 > 0 and gamma2 > 0");
    if (!(mu > 0.0)) throw std::invalid_argument("Params: need mu > 0");
  }

  double r(JobClass c) const { return c == JobClass::class1 ? r1 : r2; }
  double gamma(JobClass c) const { return c == JobClass::class1 ? gamma1 : gamma2; }

  /// Effective return rate kappa_i = r_i * gamma_i.
  double kappa(JobClass c) const { return r(c) * gamma(c); }

  /// Net orbit drain rate lambda_i = (1 - r_i) * gamma_i; the decay rate of
  /// the return queue while the primary queue is held at zero.
  double lambda(JobClass c) const { return (1.0 - r(c)) * gamma(c); }
};

double effective_return_rate(const Params& p, JobClass c);

/// Which structural regime the instance falls in: a fixed priority rule is
/// optimal iff kappa_1 <= kappa_2 (the boundary belongs to the fixed side).
enum class Regime { fixed_priority_optimal, state_dependent_needed };

Regime classify_regime(const Params& p);

}  // namespace reflux
