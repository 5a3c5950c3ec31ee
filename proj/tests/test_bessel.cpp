#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "npeflow/bessel.hpp"

// Two independent oracles, both in long double: the ascending series (small
// and moderate arguments) and the periodic-trapezoid quadrature
//   e^-x I_nu(x) = (1/2pi) int_0^2pi e^{x (cos t - 1)} cos(nu t) dt,
// which is spectrally accurate and stable at any argument size.

using npeflow::bessel::i;
using npeflow::bessel::i_scaled;
using npeflow::bessel::log_i0;
using npeflow::bessel::ratio_i1_i0;
using npeflow::bessel::ratio_i1_i0_over_x;
using npeflow::bessel::ratio_i1_i0_prime;

namespace {

long double oracle_series(int nu, long double x) {
  long double term = 1.0L;
  for (int k = 1; k <= nu; ++k) term *= (x / 2.0L) / k;
  long double sum = term;
  const long double q = (x / 2.0L) * (x / 2.0L);
  for (int m = 0; m < 400; ++m) {
    term *= q / ((m + 1.0L) * (m + nu + 1.0L));
    sum += term;
    if (term < sum * 1e-25L) break;
  }
  return sum;
}

long double oracle_scaled_quad(int nu, long double x) {
  const int n = 4096;
  const long double pi = 3.14159265358979323846264338328L;
  long double acc = 0.0L;
  for (int j = 0; j < n; ++j) {
    const long double t = 2.0L * pi * j / n;
    acc += std::exp(x * (std::cos(t) - 1.0L)) * std::cos(nu * t);
  }
  return acc / n;
}

}  // namespace

TEST_CASE("series regime against the ascending-series oracle") {
  for (int nu = 0; nu <= 2; ++nu)
    for (double x : {1e-8, 0.01, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 14.9}) {
      CAPTURE(nu);
      CAPTURE(x);
      const double expect = double(oracle_series(nu, x));
      CHECK(i(nu, x) == doctest::Approx(expect).epsilon(1e-14));
    }
}

TEST_CASE("scaled values against the quadrature oracle at all scales") {
  for (int nu = 0; nu <= 2; ++nu)
    for (double x : {0.5, 1.0, 5.0, 10.0, 14.9, 15.0, 15.1, 20.0, 50.0, 100.0,
                     700.0, 800.0}) {
      CAPTURE(nu);
      CAPTURE(x);
      const double expect = double(oracle_scaled_quad(nu, x));
      CHECK(i_scaled(nu, x) == doctest::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("frozen reference values") {
  CHECK(i(0, 1.0) == doctest::Approx(1.2660658777520084).epsilon(1e-15));
  CHECK(i(1, 1.0) == doctest::Approx(0.5651591039924850).epsilon(1e-15));
  CHECK(i(2, 1.0) == doctest::Approx(0.1357476697670383).epsilon(1e-14));
  CHECK(ratio_i1_i0(1.0) == doctest::Approx(0.4463899658965345).epsilon(1e-14));
  CHECK(log_i0(15.0) == doctest::Approx(12.735669109476906).epsilon(1e-14));
  CHECK(log_i0(100.0) == doctest::Approx(96.77973268994258).epsilon(1e-14));
  CHECK(log_i0(700.0) == doctest::Approx(695.8056999984434).epsilon(1e-14));
  CHECK(i_scaled(0, 15.0) == doctest::Approx(0.10389953144882272).epsilon(1e-14));
  CHECK(i_scaled(0, 700.0) ==
        doctest::Approx(0.015081295651531358).epsilon(1e-14));
}

TEST_CASE("consistency between the plain, scaled, and log forms") {
  for (double x : {0.5, 5.0, 10.0, 14.9, 15.1, 50.0}) {
    CAPTURE(x);
    CHECK(i(0, x) == doctest::Approx(i_scaled(0, x) * std::exp(x)).epsilon(1e-13));
    CHECK(log_i0(x) ==
          doctest::Approx(std::log(i_scaled(0, x)) + x).epsilon(1e-13));
  }
  CHECK(i(0, 0.0) == 1.0);
  CHECK(i(1, 0.0) == 0.0);
  CHECK(log_i0(0.0) == 0.0);
  CHECK(std::isfinite(log_i0(800.0)));
}

TEST_CASE("no jump across the series/asymptotic switch") {
  // Both regimes must match the quadrature oracle right at the boundary, so
  // any switch discontinuity would have to be below the oracle tolerance.
  using npeflow::bessel::kSeriesAsymptoticSwitch;
  const double lo = kSeriesAsymptoticSwitch - 1e-9;
  const double hi = kSeriesAsymptoticSwitch + 1e-9;
  for (int nu = 0; nu <= 2; ++nu) {
    CAPTURE(nu);
    const double a = i_scaled(nu, lo), b = i_scaled(nu, hi);
    CHECK(a == doctest::Approx(double(oracle_scaled_quad(nu, lo))).epsilon(1e-12));
    CHECK(b == doctest::Approx(double(oracle_scaled_quad(nu, hi))).epsilon(1e-12));
    CHECK(std::fabs(a - b) / std::fabs(a) < 1e-9);  // loose continuity sanity
  }
}

TEST_CASE("mean-direction ratio: values, small-argument forms, derivative") {
  // r(x) = I1/I0 increases from 0 to 1
  double prev = 0.0;
  for (double x : {0.1, 0.5, 1.0, 2.0, 5.0, 20.0, 100.0}) {
    const double r = ratio_i1_i0(x);
    CHECK(r > prev);
    CHECK(r < 1.0);
    CHECK(r == doctest::Approx(double(oracle_scaled_quad(1, x) /
                                      oracle_scaled_quad(0, x)))
                   .epsilon(1e-12));
    prev = r;
  }
  CHECK(ratio_i1_i0(0.0) == 0.0);
  CHECK(ratio_i1_i0(1e-6) == doctest::Approx(5e-7).epsilon(1e-9));
  CHECK(ratio_i1_i0_over_x(0.0) == 0.5);
  CHECK(ratio_i1_i0_over_x(1e-6) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(ratio_i1_i0_prime(0.0) == 0.5);
  for (double x : {0.5, 2.0, 10.0, 20.0}) {
    CAPTURE(x);
    const double h = 1e-6;
    const double fd = (ratio_i1_i0(x + h) - ratio_i1_i0(x - h)) / (2.0 * h);
    CHECK(ratio_i1_i0_prime(x) == doctest::Approx(fd).epsilon(1e-7));
  }
  CHECK(ratio_i1_i0_prime(2.0) ==
        doctest::Approx(0.16422319772120768).epsilon(1e-12));
}

TEST_CASE("argument validation") {
  CHECK_THROWS_AS(i(3, 1.0), std::domain_error);
  CHECK_THROWS_AS(i(-1, 1.0), std::domain_error);
  CHECK_THROWS_AS(i(0, -0.5), std::domain_error);
  CHECK_THROWS_AS(i_scaled(0, -1e-9), std::domain_error);
  CHECK_THROWS_AS(log_i0(-1.0), std::domain_error);
}
