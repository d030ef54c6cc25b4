#include "chasm/phase_space.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <stdexcept>

namespace chasm {

std::size_t PhaseSpaceGrid::spatial_size() const {
  std::size_t n = 1;
  for (int a = 0; a < dim; ++a) n *= nx_points();
  return n;
}

std::size_t PhaseSpaceGrid::k_size() const {
  std::size_t n = 1;
  for (int a = 0; a < dim; ++a) n *= static_cast<std::size_t>(Nk);
  return n;
}

double PhaseSpaceGrid::cell_volume() const { return std::pow(h * dk, dim); }

bool PhaseSpaceGrid::operator==(const PhaseSpaceGrid& o) const {
  return dim == o.dim && Nx == o.Nx && Nk == o.Nk && x_min == o.x_min && x_max == o.x_max && Lk == o.Lk;
}

PhaseSpaceGrid build_grid(int dim, double x_min, double x_max, int Nx, double Lk, int Nk) {
  if (dim != 1 && dim != 3) throw std::invalid_argument("build_grid: dim must be 1 or 3");
  if (!(x_max > x_min)) throw std::invalid_argument("build_grid: x extent must be positive");
  if (!(Lk > 0.0)) throw std::invalid_argument("build_grid: Lk must be positive");
  if (Nx < 4) throw std::invalid_argument("build_grid: Nx must be >= 4");
  if (Nk < 4) throw std::invalid_argument("build_grid: Nk must be >= 4");
  if (Nk % 2 != 0) throw std::invalid_argument("build_grid: Nk must be even");
  PhaseSpaceGrid g;
  g.dim = dim;
  g.x_min = x_min;
  g.x_max = x_max;
  g.Nx = Nx;
  g.Lk = Lk;
  g.Nk = Nk;
  g.h = (x_max - x_min) / Nx;
  g.dk = 2.0 * Lk / Nk;
  return g;
}

PhaseSpaceGrid sub_grid(const PhaseSpaceGrid& g, int Nx_local, double x_min_local) {
  PhaseSpaceGrid s = g;
  s.Nx = Nx_local;
  s.x_min = x_min_local;
  s.x_max = x_min_local + Nx_local * g.h;
  return s;
}

namespace {

// Multi-index helpers for cube tensors of side n in dimension d.
inline void unravel(std::size_t idx, int d, std::size_t n, int* out) {
  for (int a = d - 1; a >= 0; --a) {
    out[a] = static_cast<int>(idx % n);
    idx /= n;
  }
}

}  // namespace

WignerField init_gaussian(const PhaseSpaceGrid& grid, const std::vector<double>& center_x,
                          const std::vector<double>& center_k, double a, double b) {
  if (!(a > 0.0) || !(b > 0.0)) throw std::invalid_argument("init_gaussian: widths must be positive");
  const int d = grid.dim;
  if (static_cast<int>(center_x.size()) != d || static_cast<int>(center_k.size()) != d)
    throw std::invalid_argument("init_gaussian: center dimension mismatch");
  WignerField f(grid);
  const double norm = std::pow(std::numbers::pi, -d);
  const std::size_t K = grid.k_size();
  std::vector<double> kpart(K);
  int idx[3];
  for (std::size_t q = 0; q < K; ++q) {
    unravel(q, d, grid.Nk, idx);
    double s = 0.0;
    for (int m = 0; m < d; ++m) {
      const double dkm = grid.k(idx[m]) - center_k[m];
      s += dkm * dkm;
    }
    kpart[q] = std::exp(-b * s);
  }
  for (std::size_t sp = 0; sp < grid.spatial_size(); ++sp) {
    unravel(sp, d, grid.nx_points(), idx);
    double s = 0.0;
    for (int m = 0; m < d; ++m) {
      const double dxm = grid.x(idx[m]) - center_x[m];
      s += dxm * dxm;
    }
    const double xpart = norm * std::exp(-a * s);
    double* out = f.slice(sp);
    for (std::size_t q = 0; q < K; ++q) out[q] = xpart * kpart[q];
  }
  return f;
}

double phi_1s(double r) {
  return std::exp(-r) / (2.0 * std::numbers::sqrt2 * std::numbers::pi * std::numbers::pi);
}

namespace {

// Discrete Weyl transform at one spatial point, folded onto the Nk-periodic
// index set and transformed with one Nk^3 FFT. Returns the real part in
// FFT order (zeta mod Nk) and the largest imaginary magnitude.
std::vector<double> weyl_1s_point(const std::array<double, 3>& x, int Nk, double dy, int Ny,
                                  double& imag_max) {
  const std::size_t n = static_cast<std::size_t>(Nk);
  fftw_complex* buf = fftw_alloc_complex(n * n * n);
  std::fill(reinterpret_cast<double*>(buf), reinterpret_cast<double*>(buf) + 2 * n * n * n, 0.0);
  const double c = 1.0 / (2.0 * std::numbers::sqrt2 * std::numbers::pi * std::numbers::pi);
  const double weight = c * c * dy * dy * dy;
  const int half = Ny / 2;
  for (int e0 = -half; e0 < half; ++e0) {
    const double u0 = 0.5 * e0 * dy;
    const double am0 = (x[0] - u0) * (x[0] - u0);
    const double ap0 = (x[0] + u0) * (x[0] + u0);
    const std::size_t m0 = static_cast<std::size_t>(((e0 % Nk) + Nk) % Nk);
    for (int e1 = -half; e1 < half; ++e1) {
      const double u1 = 0.5 * e1 * dy;
      const double am1 = am0 + (x[1] - u1) * (x[1] - u1);
      const double ap1 = ap0 + (x[1] + u1) * (x[1] + u1);
      const std::size_t m1 = static_cast<std::size_t>(((e1 % Nk) + Nk) % Nk);
      double* row = reinterpret_cast<double*>(buf + (m0 * n + m1) * n);
      for (int e2 = -half; e2 < half; ++e2) {
        const double u2 = 0.5 * e2 * dy;
        const double am = am1 + (x[2] - u2) * (x[2] - u2);
        const double ap = ap1 + (x[2] + u2) * (x[2] + u2);
        const std::size_t m2 = static_cast<std::size_t>(((e2 % Nk) + Nk) % Nk);
        row[2 * m2] += weight * std::exp(-std::sqrt(am) - std::sqrt(ap));
      }
    }
  }
  fftw_plan plan = fftw_plan_dft_3d(Nk, Nk, Nk, buf, buf, FFTW_FORWARD, FFTW_ESTIMATE);
  fftw_execute(plan);
  fftw_destroy_plan(plan);
  std::vector<double> re(n * n * n);
  imag_max = 0.0;
  for (std::size_t q = 0; q < n * n * n; ++q) {
    re[q] = buf[q][0];
    imag_max = std::max(imag_max, std::abs(buf[q][1]));
  }
  fftw_free(buf);
  return re;
}

}  // namespace

WignerField init_hydrogen_1s(const PhaseSpaceGrid& grid, int Ny) {
  if (grid.dim != 3) throw std::invalid_argument("init_hydrogen_1s: requires dim = 3");
  if (Ny < grid.Nk || (Ny & (Ny - 1)) != 0)
    throw std::invalid_argument("init_hydrogen_1s: Ny must be a power of two >= Nk");
  const int Nk = grid.Nk;
  const std::size_t n = static_cast<std::size_t>(Nk);
  const double dy = 2.0 * std::numbers::pi / (Nk * grid.dk);

  // The 1s Wigner function is invariant under simultaneous signed
  // permutations of x and k, so each distinct sorted |x| is evaluated once.
  std::map<std::array<long long, 3>, std::vector<double>> cache;
  WignerField f(grid);
  double peak = 0.0;
  double imag_worst = 0.0;
  int idx[3];
  for (std::size_t sp = 0; sp < grid.spatial_size(); ++sp) {
    unravel(sp, 3, grid.nx_points(), idx);
    std::array<double, 3> x{grid.x(idx[0]), grid.x(idx[1]), grid.x(idx[2])};
    std::array<int, 3> order{0, 1, 2};
    std::sort(order.begin(), order.end(),
              [&](int p, int q) { return std::abs(x[p]) < std::abs(x[q]) || (std::abs(x[p]) == std::abs(x[q]) && p < q); });
    std::array<double, 3> xc{std::abs(x[order[0]]), std::abs(x[order[1]]), std::abs(x[order[2]])};
    std::array<long long, 3> key{std::llround(xc[0] * 1e9), std::llround(xc[1] * 1e9), std::llround(xc[2] * 1e9)};
    auto it = cache.find(key);
    if (it == cache.end()) {
      double im = 0.0;
      it = cache.emplace(key, weyl_1s_point(xc, Nk, dy, Ny, im)).first;
      imag_worst = std::max(imag_worst, im);
    }
    const std::vector<double>& src = it->second;
    std::array<bool, 3> flip{x[order[0]] < 0.0, x[order[1]] < 0.0, x[order[2]] < 0.0};
    double* out = f.slice(sp);
    for (std::size_t j0 = 0; j0 < n; ++j0)
      for (std::size_t j1 = 0; j1 < n; ++j1)
        for (std::size_t j2 = 0; j2 < n; ++j2) {
          const std::size_t j[3] = {j0, j1, j2};
          std::size_t z[3];
          for (int m = 0; m < 3; ++m) {
            // zeta index of k_j is j - Nk/2; a sign flip maps zeta -> -zeta.
            long long zeta = static_cast<long long>(j[order[m]]) - Nk / 2;
            if (flip[m]) zeta = -zeta;
            z[m] = static_cast<std::size_t>(((zeta % Nk) + Nk) % Nk);
          }
          const double v = src[(z[0] * n + z[1]) * n + z[2]];
          out[(j0 * n + j1) * n + j2] = v;
          peak = std::max(peak, std::abs(v));
        }
  }
  if (imag_worst > 1e-10 * peak)
    throw std::runtime_error("init_hydrogen_1s: imaginary residue exceeds tolerance");
  return f;
}

template <class Real>
double quadrature_mass(const FieldT<Real>& f) {
  double s = 0.0;
  for (Real v : f.values) s += static_cast<double>(v);
  return s * f.grid.cell_volume();
}

template <class Real>
Tensor2 reduced_wigner(const FieldT<Real>& f, int axis) {
  const PhaseSpaceGrid& g = f.grid;
  if (g.dim != 3) throw std::invalid_argument("reduced_wigner: requires dim = 3");
  if (axis < 0 || axis > 2) throw std::out_of_range("reduced_wigner: axis out of range");
  Tensor2 w;
  w.rows = g.nx_points();
  w.cols = static_cast<std::size_t>(g.Nk);
  w.data.assign(w.rows * w.cols, 0.0);
  const std::size_t nx = g.nx_points();
  const std::size_t nk = static_cast<std::size_t>(g.Nk);
  int xi[3];
  int ki[3];
  for (std::size_t sp = 0; sp < g.spatial_size(); ++sp) {
    unravel(sp, 3, nx, xi);
    const Real* s = f.slice(sp);
    for (std::size_t q = 0; q < g.k_size(); ++q) {
      unravel(q, 3, nk, ki);
      w(xi[axis], ki[axis]) += static_cast<double>(s[q]);
    }
  }
  const double weight = g.h * g.h * g.dk * g.dk;
  for (double& v : w.data) v *= weight;
  return w;
}

template <class Real>
Tensor2 spatial_marginal(const FieldT<Real>& f) {
  const PhaseSpaceGrid& g = f.grid;
  if (g.dim != 3) throw std::invalid_argument("spatial_marginal: requires dim = 3");
  Tensor2 p;
  p.rows = g.nx_points();
  p.cols = g.nx_points();
  p.data.assign(p.rows * p.cols, 0.0);
  const std::size_t nx = g.nx_points();
  int xi[3];
  for (std::size_t sp = 0; sp < g.spatial_size(); ++sp) {
    unravel(sp, 3, nx, xi);
    const Real* s = f.slice(sp);
    double acc = 0.0;
    for (std::size_t q = 0; q < g.k_size(); ++q) acc += static_cast<double>(s[q]);
    p(xi[0], xi[1]) += acc;
  }
  const double weight = g.h * g.dk * g.dk * g.dk;
  for (double& v : p.data) v *= weight;
  return p;
}

template <class Real>
ErrorReport error_metrics(const FieldT<Real>& numerical, const WignerField& reference, double initial_mass) {
  if (!(numerical.grid == reference.grid)) throw std::invalid_argument("error_metrics: grid mismatch");
  ErrorReport r;
  r.time = numerical.time;
  double sq = 0.0;
  for (std::size_t i = 0; i < reference.values.size(); ++i) {
    const double d = static_cast<double>(numerical.values[i]) - reference.values[i];
    r.eps_inf = std::max(r.eps_inf, std::abs(d));
    sq += d * d;
  }
  r.eps_2 = std::sqrt(sq * numerical.grid.cell_volume());
  r.eps_mass = std::abs(quadrature_mass(numerical) - initial_mass);
  return r;
}

template <class Real>
double max_abs(const FieldT<Real>& f) {
  double m = 0.0;
  for (Real v : f.values) m = std::max(m, std::abs(static_cast<double>(v)));
  return m;
}

template <class Real>
bool all_finite(const FieldT<Real>& f) {
  for (Real v : f.values)
    if (!std::isfinite(static_cast<double>(v))) return false;
  return true;
}

#define CHASM_INSTANTIATE(R)                                                               \
  template double quadrature_mass<R>(const FieldT<R>&);                                    \
  template Tensor2 reduced_wigner<R>(const FieldT<R>&, int);                               \
  template Tensor2 spatial_marginal<R>(const FieldT<R>&);                                   \
  template ErrorReport error_metrics<R>(const FieldT<R>&, const WignerField&, double);     \
  template double max_abs<R>(const FieldT<R>&);                                            \
  template bool all_finite<R>(const FieldT<R>&);

CHASM_INSTANTIATE(double)
CHASM_INSTANTIATE(float)
#undef CHASM_INSTANTIATE

}  // namespace chasm
