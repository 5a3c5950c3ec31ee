#pragma once

// In-house modified Bessel functions of the first kind, orders 0..2, for
// non-negative real arguments. Power series below the switch point (all terms
// positive, no cancellation), asymptotic expansion above it (overflow-safe via
// the exponentially scaled form). The switch point is tested for continuity
// and against quadrature.

namespace npeflow::bessel {

inline constexpr double kSeriesAsymptoticSwitch = 15.0;

// I_nu(x); overflows double for x beyond ~709.
double i(int nu, double x);

// e^{-x} I_nu(x); safe for large x.
double i_scaled(int nu, double x);

// log I0(x).
double log_i0(double x);

// I1(x)/I0(x): the von Mises mean resultant length. Monotone [0,1).
double ratio_i1_i0(double x);

// I1(x)/(x I0(x)); finite limit 1/2 as x -> 0.
double ratio_i1_i0_over_x(double x);

// d/dx [I1(x)/I0(x)] = (I0(x)+I2(x))/(2 I0(x)) - (I1(x)/I0(x))^2; limit 1/2.
double ratio_i1_i0_prime(double x);

}  // namespace npeflow::bessel
