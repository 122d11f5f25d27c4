#include <doctest.h>

#include <cmath>
#include <initializer_list>
#include <utility>

#include "reflux/phi.hpp"

using namespace reflux::detail;

namespace {

struct Row {
  double x, phi1, phi2, phi3, psi2, sinhc;
};

// x, phi1, phi2, phi3, psi2, sinhc  (mpmath, 50 digits; see
// tests/oracles/phi_reference.py)
const Row kReference[] = {
    {1e-12, 0.9999999999995, 0.49999999999983333, 0.16666666666662473, 0.49999999999966667, 1.0},
    {1e-8, 0.99999999500000002, 0.49999999833333334, 0.16666666625, 0.49999999666666668, 1.0},
    {1e-4, 0.999950001666625, 0.49998333374999167, 0.16666250008333194, 0.49996666791663333, 1.0000000016666667},
    {0.01, 0.99501662508319464, 0.49833749168053574, 0.16625083194642609, 0.4966791334026589, 1.0000166667500002},
    {0.1, 0.95162581964040427, 0.48374180359595732, 0.16258196404042684, 0.46788401604444695, 1.0016675001984403},
    {0.5, 0.78693868057473315, 0.42612263885053369, 0.14775472229893261, 0.36081604172419946, 1.0421906109874947},
    {0.74, 0.70660281686346704, 0.39648267991423373, 0.13988827038617064, 0.31012013694923332, 1.0937983776846826},
    {0.76, 0.7004389118290668, 0.39415932654070158, 0.13926404402539265, 0.30627958528836522, 1.0990853904519141},
    {1.0, 0.63212055882855768, 0.36787944117144232, 0.13212055882855768, 0.26424111765711536, 1.1752011936438015},
    {2.0, 0.43233235838169365, 0.28383382080915317, 0.10808308959542341, 0.14849853757254048, 1.8134302039235094},
    {5.0, 0.19865241060018291, 0.16026951787996342, 0.067946096424007316, 0.038382892720219488, 14.840642115557752},
    {20.0, 0.049999999896942319, 0.047500000005152884, 0.022624999999742356, 0.0024999998917894348, 12129129.885244757},
    {100.0, 0.01, 0.0099, 0.004901, 0.0001, 1.3440585709080677e+41},
};

double rel_err(double got, double want) {
  return std::fabs(got - want) / std::max(std::fabs(want), 1e-300);
}

}  // namespace

TEST_CASE("phi functions match the high-precision reference") {
  for (const Row& r : kReference) {
    CAPTURE(r.x);
    CHECK(rel_err(phi1(r.x), r.phi1) < 3e-15);
    CHECK(rel_err(phi2(r.x), r.phi2) < 3e-15);
    CHECK(rel_err(phi3(r.x), r.phi3) < 3e-15);
    CHECK(rel_err(psi2(r.x), r.psi2) < 3e-15);
    CHECK(rel_err(sinhc(r.x), r.sinhc) < 3e-15);
  }
  CHECK(phi1(0.0) == 1.0);
  CHECK(phi2(0.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(phi3(0.0) == doctest::Approx(1.0 / 6.0).epsilon(1e-15));
  CHECK(sinhc(0.0) == 1.0);
}

TEST_CASE("series/direct crossover is seamless") {
  // Values straddling the series cutoff must agree to near machine precision.
  for (double x : {0.7499, 0.7501, 0.749999, 0.750001}) {
    const double eps = 1e-7;
    CHECK(rel_err(phi2(x + eps), phi2(x)) < 1e-6);
    CHECK(rel_err(phi3(x + eps), phi3(x)) < 1e-6);
    CHECK(rel_err(psi2(x + eps), psi2(x)) < 1e-6);
  }
}

TEST_CASE("divided differences agree with finite slopes away from coincidence") {
  for (auto [a, b] : {std::pair{0.3, 1.7}, {2.0, 0.01}, {4.0, 3.0}}) {
    CHECK(rel_err(dd_phi1(a, b), (phi1(a) - phi1(b)) / (a - b)) < 1e-12);
    CHECK(rel_err(dd_phi2(a, b), (phi2(a) - phi2(b)) / (a - b)) < 1e-12);
  }
}

TEST_CASE("divided differences stay stable at near-coincident arguments") {
  // Compare against the analytic derivative at the midpoint.
  for (double x : {0.05, 0.5, 2.0, 10.0}) {
    const double h = 1e-9 * (1.0 + x);
    CHECK(rel_err(dd_phi1(x + h, x - h), -psi2(x)) < 1e-9);
    CHECK(rel_err(dd_phi2(x + h, x - h), phi2_prime(x)) < 1e-9);
    CHECK(rel_err(dd_phi1(x, x), -psi2(x)) < 1e-14);
  }
}

TEST_CASE("phi2_prime matches a central difference of phi2") {
  for (double x : {0.2, 1.0, 3.0}) {
    const double h = 1e-6;
    const double fd = (phi2(x + h) - phi2(x - h)) / (2 * h);
    CHECK(rel_err(phi2_prime(x), fd) < 1e-8);
  }
}

TEST_CASE("exp_difference_quotient handles coincident and distant arguments") {
  // (e^-a - e^-b)/(b - a)
  const double a = 0.8, b = 2.3;
  CHECK(rel_err(exp_difference_quotient(a, b),
                (std::exp(-a) - std::exp(-b)) / (b - a)) < 1e-14);
  // a == b limit: e^{-a}
  CHECK(rel_err(exp_difference_quotient(1.3, 1.3), std::exp(-1.3)) < 1e-14);
  // near-coincident
  CHECK(rel_err(exp_difference_quotient(1.3, 1.3 + 1e-12), std::exp(-1.3)) < 1e-12);
  // huge arguments must not overflow through intermediate terms
  CHECK(exp_difference_quotient(800.0, 900.0) >= 0.0);
  CHECK(std::isfinite(exp_difference_quotient(800.0, 900.0)));
}
