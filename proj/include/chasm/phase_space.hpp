#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

namespace chasm {

/// Uniform phase-space grid. Every spatial axis spans [x_min, x_max] with
/// Nx intervals (Nx+1 points); every k axis holds Nk points
/// k_j = -Lk + j*dk, j = 0..Nk-1.
struct PhaseSpaceGrid {
  int dim = 1;
  double x_min = 0.0;
  double x_max = 1.0;
  int Nx = 4;
  double Lk = 1.0;
  int Nk = 4;
  double h = 0.25;
  double dk = 0.5;

  std::size_t nx_points() const { return static_cast<std::size_t>(Nx) + 1; }
  std::size_t spatial_size() const;
  std::size_t k_size() const;
  std::size_t size() const { return spatial_size() * k_size(); }

  double x(int i) const { return x_min + i * h; }
  double k(int j) const { return -Lk + j * dk; }

  /// Phase-space cell volume h^d * dk^d used by every quadrature.
  double cell_volume() const;

  bool operator==(const PhaseSpaceGrid& o) const;
};

PhaseSpaceGrid build_grid(int dim, double x_min, double x_max, int Nx, double Lk, int Nk);

/// Grid over an explicit sub-range of x; used for patch-local fields.
PhaseSpaceGrid sub_grid(const PhaseSpaceGrid& g, int Nx_local, double x_min_local);

/// Dense real tensor over a phase-space grid. Storage is row-major with the
/// spatial multi-index outermost and the k multi-index fastest.
template <class Real>
struct FieldT {
  PhaseSpaceGrid grid;
  std::vector<Real> values;
  double time = 0.0;

  FieldT() = default;
  explicit FieldT(const PhaseSpaceGrid& g, double t = 0.0) : grid(g), values(g.size(), Real(0)), time(t) {}

  std::size_t k_size() const { return grid.k_size(); }
  Real* slice(std::size_t spatial) { return values.data() + spatial * grid.k_size(); }
  const Real* slice(std::size_t spatial) const { return values.data() + spatial * grid.k_size(); }
};

using WignerField = FieldT<double>;
using WignerField32 = FieldT<float>;

template <class To, class From>
FieldT<To> convert_field(const FieldT<From>& f) {
  FieldT<To> out;
  out.grid = f.grid;
  out.time = f.time;
  out.values.assign(f.values.begin(), f.values.end());
  return out;
}

struct ErrorReport {
  double eps_inf = 0.0;
  double eps_2 = 0.0;
  double eps_mass = 0.0;
  double time = 0.0;
};

/// Row-major 2-D real tensor for reduced and marginal distributions.
struct Tensor2 {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;
  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

/// pi^{-d} exp(-a|x-xc|^2 - b|k-kc|^2) sampled on the grid.
WignerField init_gaussian(const PhaseSpaceGrid& grid, const std::vector<double>& center_x,
                          const std::vector<double>& center_k, double a, double b);

/// Real part of the discrete Weyl transform of the Hydrogen 1s orbital.
/// Throws std::runtime_error when the imaginary residue exceeds 1e-10
/// relative to the peak.
WignerField init_hydrogen_1s(const PhaseSpaceGrid& grid, int Ny = 128);

/// Hydrogen 1s orbital exp(-|x|) / (2 sqrt(2) pi^2).
double phi_1s(double r);

template <class Real>
double quadrature_mass(const FieldT<Real>& f);

template <class Real>
Tensor2 reduced_wigner(const FieldT<Real>& f, int axis);

template <class Real>
Tensor2 spatial_marginal(const FieldT<Real>& f);

template <class Real>
ErrorReport error_metrics(const FieldT<Real>& numerical, const WignerField& reference,
                          double initial_mass);

template <class Real>
double max_abs(const FieldT<Real>& f);

template <class Real>
bool all_finite(const FieldT<Real>& f);

// Binary dumps: "CHSM" header then the row-major values.
template <class Real>
void write_field(const std::string& path, const FieldT<Real>& f);
WignerField read_field(const std::string& path);
/// Element width in bytes recorded in a dump header (4 or 8).
int read_field_precision(const std::string& path);

void write_tensor2_text(const std::string& path, const Tensor2& t, const std::vector<double>& row_axis,
                        const std::vector<double>& col_axis, char delim = ',');

}  // namespace chasm
