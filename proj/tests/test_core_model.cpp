#include <doctest.h>

#include <random>

#include "reflux/dynamics.hpp"
#include "reflux/params.hpp"
#include "reflux/state.hpp"

using namespace reflux;

namespace {
Params figure2() { return Params(0.2, 0.8, 2.0, 0.2, 2.0); }
}

TEST_CASE("parameter validation is strict at construction") {
  CHECK_NOTHROW(Params(0.2, 0.8, 2.0, 0.2, 2.0));
  CHECK_THROWS_AS(Params(0.5, 0.5, 1.0, 1.0, 1.0), std::invalid_argument);  // r1 == r2
  CHECK_THROWS_AS(Params(0.8, 0.2, 1.0, 1.0, 1.0), std::invalid_argument);  // r1 > r2
  CHECK_THROWS_AS(Params(0.0, 0.5, 1.0, 1.0, 1.0), std::invalid_argument);  // r1 == 0
  CHECK_THROWS_AS(Params(0.2, 1.0, 1.0, 1.0, 1.0), std::invalid_argument);  // r2 == 1
  CHECK_THROWS_AS(Params(0.5, 0.8, 0.0, 1.0, 1.0), std::invalid_argument);  // gamma1 == 0
  CHECK_THROWS_AS(Params(0.5, 0.8, 1.0, -2.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(Params(0.5, 0.8, 1.0, 1.0, 0.0), std::invalid_argument);  // mu == 0
}

TEST_CASE("effective return rates") {
  const Params p = figure2();
  CHECK(effective_return_rate(p, JobClass::class1) == doctest::Approx(0.4).epsilon(1e-15));
  CHECK(effective_return_rate(p, JobClass::class2) == doctest::Approx(0.16).epsilon(1e-15));
}

TEST_CASE("regime classification") {
  CHECK(classify_regime(figure2()) == Regime::state_dependent_needed);
  CHECK(classify_regime(Params(0.2, 0.8, 1.0, 1.0, 1.0)) ==
        Regime::fixed_priority_optimal);
  // Exact boundary: 0.2*2 == 0.8*0.5 bit-for-bit; the boundary is fixed-priority.
  const Params boundary(0.2, 0.8, 2.0, 0.5, 2.0);
  CHECK(boundary.kappa(JobClass::class1) == boundary.kappa(JobClass::class2));
  CHECK(classify_regime(boundary) == Regime::fixed_priority_optimal);
}

TEST_CASE("classification is invariant under joint rate scaling") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    double r1 = 0.05 + 0.9 * uni(rng), r2 = 0.05 + 0.9 * uni(rng);
    if (r1 > r2) std::swap(r1, r2);
    if (r2 - r1 < 1e-3) continue;
    const double g1 = 0.05 + 5.0 * uni(rng), g2 = 0.05 + 5.0 * uni(rng);
    const double c = std::exp(3.0 * (uni(rng) - 0.5));
    const Params a(r1, r2, g1, g2, 1.0 + uni(rng));
    const Params b(r1, r2, c * g1, c * g2, a.mu);
    CHECK(classify_regime(a) == classify_regime(b));
    CHECK(a.kappa(JobClass::class1) > 0.0);
    CHECK(a.kappa(JobClass::class2) > 0.0);
  }
}

TEST_CASE("total class work") {
  CHECK(total_class_work(State{2.0, 0.0, 0.0, 0.0}, JobClass::class1) == 2.0);
  CHECK(total_class_work(State{}, JobClass::class1) == 0.0);
  CHECK(total_class_work(State{}, JobClass::class2) == 0.0);
  CHECK(total_class_work(State{1.5, 0.25, 0.0, 0.0}, JobClass::class1) == 1.75);
}

TEST_CASE("allocation admissibility is closed under convex combination") {
  const Params p = figure2();
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  for (int i = 0; i < 500; ++i) {
    const State s{uni(rng) < 0.3 ? 0.0 : 2.0 * uni(rng), uni(rng),
                  uni(rng) < 0.3 ? 0.0 : 2.0 * uni(rng), uni(rng)};
    const AdmissibleBounds bnd = admissible_bounds(s, p);
    const Allocation a{bnd.u1_max * uni(rng),
                       std::min(bnd.u2_max, 1.0 - bnd.u1_max * 0.0) * 0.0};
    Allocation b{bnd.u1_max * uni(rng), 0.0};
    b.u2 = std::min(bnd.u2_max, 1.0 - b.u1) * uni(rng);
    Allocation c{bnd.u1_max * uni(rng), 0.0};
    c.u2 = std::min(bnd.u2_max, 1.0 - c.u1) * uni(rng);
    REQUIRE(is_admissible(s, b, p));
    REQUIRE(is_admissible(s, c, p));
    const double w = uni(rng);
    const Allocation mix{w * b.u1 + (1 - w) * c.u1, w * b.u2 + (1 - w) * c.u2};
    CHECK(is_admissible(s, mix, p));
    (void)a;
  }
}
