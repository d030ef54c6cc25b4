#include "chasm/bspline.hpp"

#include <cassert>
#include <cmath>
#include <stdexcept>

namespace chasm {

double bspline_eval(int nu, double x, double origin, double h) {
  const double t = std::abs(x - (origin + nu * h)) / h;
  if (t < 1.0) return 2.0 / 3.0 - t * t + 0.5 * t * t * t;
  if (t < 2.0) {
    const double s = 2.0 - t;
    return s * s * s / 6.0;
  }
  return 0.0;
}

SplineSolver::SplineSolver(int N, double h, BcKind kind) : N_(N), h_(h), kind_(kind) {
  if (N < 3) throw std::invalid_argument("SplineSolver: N must be >= 3");
  if (!(h > 0.0)) throw std::invalid_argument("SplineSolver: h must be positive");
  if (kind == BcKind::Hermite) {
    top_[0] = -1.0 / (2.0 * h);
    top_[1] = 0.0;
    top_[2] = 1.0 / (2.0 * h);
  } else {
    top_[0] = 1.0;
    top_[1] = -2.0;
    top_[2] = 1.0;
  }
  // Right row: coefficient of eta_{N+1}, eta_N, eta_{N-1}.
  bot_[0] = top_[2];
  bot_[1] = top_[1];
  bot_[2] = top_[0];

  const std::size_t n = static_cast<std::size_t>(N) + 1;
  std::vector<double> diag(n, 2.0 / 3.0), upper(n, 1.0 / 6.0);
  lower_.assign(n, 1.0 / 6.0);
  // eta_{-1} = 6 r_0 - 4 eta_0 - eta_1 substituted into the top row.
  diag[0] = top_[1] - 4.0 * top_[0];
  upper[0] = top_[2] - top_[0];
  lower_[0] = 0.0;
  diag[n - 1] = bot_[1] - 4.0 * bot_[0];
  lower_[n - 1] = bot_[2] - bot_[0];
  upper[n - 1] = 0.0;

  cprime_.assign(n, 0.0);
  inv_denom_.assign(n, 0.0);
  double cp = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double denom = diag[i] - (i ? lower_[i] * cp : 0.0);
    assert(std::abs(denom) > 1e-300);
    inv_denom_[i] = 1.0 / denom;
    cp = upper[i] * inv_denom_[i];
    cprime_[i] = cp;
  }
}

void SplineSolver::solve(const double* rhs, double* eta, std::size_t ncols) const {
  const std::size_t n = static_cast<std::size_t>(N_) + 1;
  // eta row r holds eta_{r-1}; rhs row r holds r_{r-1}.
  const double* r_top = rhs;
  const double* r0 = rhs + ncols;
  {
    double* y = eta + ncols;
    for (std::size_t c = 0; c < ncols; ++c) y[c] = (r_top[c] - 6.0 * top_[0] * r0[c]) * inv_denom_[0];
  }
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double* ri = rhs + (i + 1) * ncols;
    const double* yp = eta + i * ncols;
    double* y = eta + (i + 1) * ncols;
    const double l = lower_[i], inv = inv_denom_[i];
    for (std::size_t c = 0; c < ncols; ++c) y[c] = (ri[c] - l * yp[c]) * inv;
  }
  {
    const std::size_t i = n - 1;
    const double* rN = rhs + (i + 1) * ncols;
    const double* r_bot = rhs + (i + 2) * ncols;
    const double* yp = eta + i * ncols;
    double* y = eta + (i + 1) * ncols;
    const double l = lower_[i], inv = inv_denom_[i];
    for (std::size_t c = 0; c < ncols; ++c) y[c] = (r_bot[c] - 6.0 * bot_[0] * rN[c] - l * yp[c]) * inv;
  }
  for (std::size_t i = n - 1; i-- > 0;) {
    double* y = eta + (i + 1) * ncols;
    const double* yn = eta + (i + 2) * ncols;
    const double cp = cprime_[i];
    for (std::size_t c = 0; c < ncols; ++c) y[c] -= cp * yn[c];
  }
  {
    double* g = eta;
    const double* e0 = eta + ncols;
    const double* e1 = eta + 2 * ncols;
    for (std::size_t c = 0; c < ncols; ++c) g[c] = 6.0 * r0[c] - 4.0 * e0[c] - e1[c];
  }
  {
    const double* rN = rhs + n * ncols;
    double* g = eta + (n + 1) * ncols;
    const double* eN = eta + n * ncols;
    const double* eN1 = eta + (n - 1) * ncols;
    for (std::size_t c = 0; c < ncols; ++c) g[c] = 6.0 * rN[c] - 4.0 * eN[c] - eN1[c];
  }
}

std::vector<double> SplineSolver::solve(const std::vector<double>& rhs) const {
  if (rhs.size() != static_cast<std::size_t>(N_) + 3) throw std::invalid_argument("SplineSolver::solve: size");
  std::vector<double> eta(rhs.size());
  solve(rhs.data(), eta.data(), 1);
  return eta;
}

std::vector<double> SplineSolver::apply(const std::vector<double>& eta) const {
  const std::size_t m = static_cast<std::size_t>(N_) + 3;
  if (eta.size() != m) throw std::invalid_argument("SplineSolver::apply: size");
  std::vector<double> r(m);
  r[0] = top_[0] * eta[0] + top_[1] * eta[1] + top_[2] * eta[2];
  for (std::size_t i = 1; i + 1 < m; ++i) r[i] = eta[i - 1] / 6.0 + 2.0 * eta[i] / 3.0 + eta[i + 1] / 6.0;
  r[m - 1] = bot_[0] * eta[m - 1] + bot_[1] * eta[m - 2] + bot_[2] * eta[m - 3];
  return r;
}

SplineCoefficients solve_global_spline(const std::vector<double>& samples, double h, const BoundaryCondition& bc) {
  if (samples.size() < 4) throw std::invalid_argument("solve_global_spline: need N >= 3");
  const int N = static_cast<int>(samples.size()) - 1;
  SplineSolver solver(N, h, bc.kind);
  std::vector<double> rhs(samples.size() + 2);
  rhs.front() = bc.kind == BcKind::Hermite ? bc.phi_L : 0.0;
  rhs.back() = bc.kind == BcKind::Hermite ? bc.phi_R : 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) rhs[i + 1] = samples[i];
  SplineCoefficients out;
  out.eta = solver.solve(rhs);
  out.h = h;
  out.N = N;
  return out;
}

ShiftWeights shift_weights(double alpha) {
  const double a = std::abs(alpha);
  if (!(a < 1.0)) throw std::invalid_argument("shift_weights: |alpha| must be < 1");
  const double s = 1.0 - a;
  ShiftWeights w;
  w.b1 = s * s * s / 6.0;
  w.b2 = -s * s * s / 2.0 + s * s / 2.0 + s / 2.0 + 1.0 / 6.0;
  w.b3 = -a * a * a / 2.0 + a * a / 2.0 + a / 2.0 + 1.0 / 6.0;
  w.b4 = a * a * a / 6.0;
  return w;
}

void tap_weights(double alpha, double w[5]) {
  const ShiftWeights b = shift_weights(alpha);
  if (alpha >= 0.0) {
    w[0] = b.b4;
    w[1] = b.b3;
    w[2] = b.b2;
    w[3] = b.b1;
    w[4] = 0.0;
  } else {
    w[0] = 0.0;
    w[1] = b.b1;
    w[2] = b.b2;
    w[3] = b.b3;
    w[4] = b.b4;
  }
}

void interpolate_shifted_columns(const double* eta, int N, std::size_t ncols, const double* weights, double* out) {
  const double* w0 = weights;
  const double* w1 = weights + ncols;
  const double* w2 = weights + 2 * ncols;
  const double* w3 = weights + 3 * ncols;
  const double* w4 = weights + 4 * ncols;
  for (int j = 0; j <= N; ++j) {
    // eta_nu sits in row nu + 1; rows for nu = -2 and N+2 are the zero ghosts.
    const double* em2 = j >= 1 ? eta + static_cast<std::size_t>(j - 1) * ncols : nullptr;
    const double* em1 = eta + static_cast<std::size_t>(j) * ncols;
    const double* e0 = eta + static_cast<std::size_t>(j + 1) * ncols;
    const double* ep1 = eta + static_cast<std::size_t>(j + 2) * ncols;
    const double* ep2 = j + 3 <= N + 2 ? eta + static_cast<std::size_t>(j + 3) * ncols : nullptr;
    double* o = out + static_cast<std::size_t>(j) * ncols;
    for (std::size_t c = 0; c < ncols; ++c) o[c] = w1[c] * em1[c] + w2[c] * e0[c] + w3[c] * ep1[c];
    if (em2)
      for (std::size_t c = 0; c < ncols; ++c) o[c] += w0[c] * em2[c];
    if (ep2)
      for (std::size_t c = 0; c < ncols; ++c) o[c] += w4[c] * ep2[c];
  }
}

std::vector<double> interpolate_shifted(const SplineCoefficients& coeffs, double alpha) {
  double w[5];
  tap_weights(alpha, w);
  std::vector<double> out(static_cast<std::size_t>(coeffs.N) + 1);
  interpolate_shifted_columns(coeffs.eta.data(), coeffs.N, 1, w, out.data());
  return out;
}

}  // namespace chasm
