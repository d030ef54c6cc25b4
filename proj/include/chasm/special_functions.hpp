#pragma once

namespace chasm {

/// Si(x) = integral_0^x sin(t)/t dt, odd in x. Power series for |x| <= 2,
/// continued fraction of E1(ix) beyond.
double sine_integral(double x);

/// Dawson function F(x) = exp(-x^2) integral_0^x exp(t^2) dt.
double dawson(double x);

/// F(x)/x with the removable singularity at 0 filled in.
double dawson_over_x(double x);

/// c_{n,alpha} = pi^{n/2} 2^alpha Gamma(alpha/2) / Gamma((n-alpha)/2).
double coulomb_constant(int n, double alpha);

}  // namespace chasm
