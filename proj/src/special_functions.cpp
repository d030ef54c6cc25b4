#include "chasm/special_functions.hpp"

#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace chasm {

double sine_integral(double x) {
  if (x < 0.0) return -sine_integral(-x);
  if (x == 0.0) return 0.0;
  if (x <= 2.0) {
    // sum_n (-1)^n x^{2n+1} / ((2n+1)(2n+1)!)
    const double x2 = x * x;
    double term = x;  // x^{2n+1}/(2n+1)!
    double sum = x;
    for (int n = 1; n < 40; ++n) {
      term *= -x2 / ((2.0 * n) * (2.0 * n + 1.0));
      const double add = term / (2.0 * n + 1.0);
      sum += add;
      if (std::abs(add) < 1e-18 * std::abs(sum)) break;
    }
    return sum;
  }
  // Modified Lentz evaluation of E1(ix) = -Ci(x) + i (Si(x) - pi/2).
  using C = std::complex<double>;
  const double tiny = 1e-300;
  C b(1.0, x);
  C c(1.0 / tiny, 0.0);
  C d = 1.0 / b;
  C h = d;
  for (int i = 2; i < 100000; ++i) {
    const double a = -static_cast<double>((i - 1) * (i - 1));
    b += 2.0;
    d = 1.0 / (a * d + b);
    c = b + a / c;
    const C del = c * d;
    h *= del;
    if (std::abs(del.real() - 1.0) + std::abs(del.imag()) < 1e-16) break;
  }
  h *= C(std::cos(x), -std::sin(x));
  return std::numbers::pi / 2.0 + h.imag();
}

namespace {

double dawson_series(double x) {
  // F(x) = sum_n (-1)^n 2^n x^{2n+1} / (2n+1)!!
  const double x2 = x * x;
  double term = x;
  double sum = x;
  for (int n = 1; n < 60; ++n) {
    term *= -2.0 * x2 / (2.0 * n + 1.0);
    sum += term;
    if (std::abs(term) < 1e-18 * std::abs(sum)) break;
  }
  return sum;
}

// Rybicki's sampling-theorem sum with step 0.2; truncation error of order
// exp(-(pi/0.4)^2), below double resolution.
double dawson_rybicki(double x) {
  constexpr double h = 0.2;
  constexpr int nmax = 40;
  const double ax = std::abs(x);
  const double n0 = 2.0 * std::round(0.5 * ax / h);
  const double xp = ax - n0 * h;
  double sum = 0.0;
  for (int k = nmax - 1; k >= 0; --k) {
    const double m = 2.0 * k + 1.0;
    const double e1 = std::exp(-(xp - m * h) * (xp - m * h));
    const double e2 = std::exp(-(xp + m * h) * (xp + m * h));
    sum += e1 / (m + n0) - e2 / (m - n0);
  }
  const double r = sum / std::sqrt(std::numbers::pi);
  return x < 0.0 ? -r : r;
}

}  // namespace

double dawson(double x) {
  if (std::abs(x) < 0.2) return dawson_series(x);
  return dawson_rybicki(x);
}

double dawson_over_x(double x) {
  if (std::abs(x) < 0.2) {
    const double x2 = x * x;
    double term = 1.0;
    double sum = 1.0;
    for (int n = 1; n < 60; ++n) {
      term *= -2.0 * x2 / (2.0 * n + 1.0);
      sum += term;
      if (std::abs(term) < 1e-18) break;
    }
    return sum;
  }
  return dawson_rybicki(x) / x;
}

double coulomb_constant(int n, double alpha) {
  if (!(alpha > 0.0) || !(n - alpha > 0.0)) throw std::invalid_argument("coulomb_constant: need 0 < alpha < n");
  return std::pow(std::numbers::pi, 0.5 * n) * std::pow(2.0, alpha) * std::tgamma(0.5 * alpha) /
         std::tgamma(0.5 * (n - alpha));
}

}  // namespace chasm
