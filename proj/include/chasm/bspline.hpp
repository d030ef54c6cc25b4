#pragma once

#include <cstddef>
#include <vector>

namespace chasm {

enum class BcKind { Natural, Hermite };

/// Spline closure at the two ends of a line. Hermite prescribes the first
/// derivatives phi_L, phi_R; Natural forces zero second derivatives.
struct BoundaryCondition {
  BcKind kind = BcKind::Natural;
  double phi_L = 0.0;
  double phi_R = 0.0;

  static BoundaryCondition natural() { return {}; }
  static BoundaryCondition hermite(double l, double r) { return {BcKind::Hermite, l, r}; }
};

/// Coefficients eta_{-1..N+1}; eta[nu + 1] holds eta_nu.
struct SplineCoefficients {
  std::vector<double> eta;
  double h = 1.0;
  int N = 0;
  double at(int nu) const { return eta[static_cast<std::size_t>(nu + 1)]; }
};

/// Cubic B-spline centred at origin + nu*h.
double bspline_eval(int nu, double x, double origin, double h);

/// Factorised (N+3)x(N+3) spline system
///   row -1   : boundary row (Hermite: (-eta_{-1} + eta_1)/(2h); Natural: eta_{-1} - 2 eta_0 + eta_1)
///   rows 0..N: eta_{i-1}/6 + 2 eta_i/3 + eta_{i+1}/6
///   row N+1  : boundary row mirrored at the right end.
/// The ghost unknowns are eliminated with rows 0 and N, leaving a
/// tridiagonal system on eta_0..eta_N handled by the Thomas algorithm.
class SplineSolver {
 public:
  SplineSolver(int N, double h, BcKind kind);

  int N() const { return N_; }
  double h() const { return h_; }
  BcKind kind() const { return kind_; }

  /// Solves for ncols independent right-hand sides stored row-major as
  /// (N+3) x ncols; eta uses the same layout. rhs and eta must not alias.
  void solve(const double* rhs, double* eta, std::size_t ncols) const;

  std::vector<double> solve(const std::vector<double>& rhs) const;

  /// A * eta for a single column (length N+3).
  std::vector<double> apply(const std::vector<double>& eta) const;

 private:
  int N_;
  double h_;
  BcKind kind_;
  // Boundary rows as (coefficient of outer ghost, of node, of inner neighbour).
  double top_[3];
  double bot_[3];
  std::vector<double> lower_, cprime_, inv_denom_;
};

SplineCoefficients solve_global_spline(const std::vector<double>& samples, double h, const BoundaryCondition& bc);

struct ShiftWeights {
  double b1, b2, b3, b4;
};

/// Cubic B-spline values at a point shifted by |alpha| cells; |alpha| < 1.
ShiftWeights shift_weights(double alpha);

/// Five-tap weights w such that phi(x_j - alpha h) = sum_t w[t] eta_{j-2+t}.
/// alpha >= 0 uses (b4, b3, b2, b1, 0); alpha < 0 uses (0, b1, b2, b3, b4)
/// built from |alpha|.
void tap_weights(double alpha, double w[5]);

/// phi(x_j - alpha h), j = 0..N, with ghost coefficients eta_{-2} = eta_{N+2} = 0.
std::vector<double> interpolate_shifted(const SplineCoefficients& coeffs, double alpha);

/// Column-batched shifted interpolation. eta is (N+3) x ncols, weights is
/// 5 x ncols (per-column taps from tap_weights), out is (N+1) x ncols.
void interpolate_shifted_columns(const double* eta, int N, std::size_t ncols, const double* weights, double* out);

}  // namespace chasm
