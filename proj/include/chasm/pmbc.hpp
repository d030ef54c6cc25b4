#pragma once

#include <cstddef>
#include <vector>

#include "chasm/bspline.hpp"

namespace chasm {

/// Truncated inverse-spline stencils for a line of N intervals split into
/// p patches of M = N/p intervals. Patch q (0-based) owns x_{qM}..x_{(q+1)M};
/// interface I (1..p-1) sits at x_{IM} and is shared by patches I-1 and I.
struct PmbcTable {
  int N = 0;
  int M = 0;
  int p = 1;
  int n_nb = 0;
  double h = 1.0;
  BcKind bc = BcKind::Natural;
  /// Indexed by interface I; entries 0 and p are unused.
  std::vector<double> c0;
  std::vector<std::vector<double>> c_minus;  ///< c_minus[I][j-1], j = 1..n_nb
  std::vector<std::vector<double>> c_plus;   ///< c_plus[I][j-1], j = 1..n_nb
  /// Natural closure at the global ends, j = 0..n_nb (empty for Hermite).
  std::vector<double> c_first;
  std::vector<double> c_last;
  SplineSolver local;

  PmbcTable() : local(3, 1.0, BcKind::Hermite) {}
};

/// Builds the stencils from columns of the exact global inverse, obtained by
/// unit-vector solves of the global system (Hermite or Natural rows).
PmbcTable build_pmbc_table(int N, int p, int n_nb, double h, BcKind bc);

enum class Side { L, R };

/// Half-stencil contribution xi of patch q at its left (Side::L) or right
/// (Side::R) interface from the patch's own M+1 samples.
double pmbc_contrib(const std::vector<double>& patch_samples, const PmbcTable& t, Side side, int q);

/// Column-batched pmbc_contrib: samples is (M+1) x ncols, out has ncols entries.
void pmbc_contrib_columns(const double* samples, std::size_t ncols, const PmbcTable& t, Side side, int q,
                          double* out);

/// Natural-closure derivative estimate at a global end (Side::L for patch 0,
/// Side::R for patch p-1).
double pmbc_edge(const std::vector<double>& patch_samples, const PmbcTable& t, Side side);

void pmbc_edge_columns(const double* samples, std::size_t ncols, const PmbcTable& t, Side side, double* out);

struct LocalSpline {
  std::vector<double> eta_local;  ///< eta_{-1..M+1}
  int patch_id = 0;
};

LocalSpline assemble_local_spline(const std::vector<double>& patch_samples, double phi_L, double phi_R,
                                  const PmbcTable& t, int patch_id);

/// All local splines of a line, assembled in-process (contributions,
/// exchange and local solves). For global Hermite BC, bc.phi_L/phi_R
/// close the end patches.
std::vector<LocalSpline> assemble_all_local_splines(const std::vector<double>& samples, const PmbcTable& t,
                                                    const BoundaryCondition& bc);

/// Entry (i, j) of the inverse global spline matrix, i, j in -1..N+1.
/// Computed from one unit-vector solve; intended for diagnostics and tests.
double inverse_spline_entry(int N, double h, BcKind bc, int i, int j);

}  // namespace chasm
