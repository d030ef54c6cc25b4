#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "chasm/special_functions.hpp"
#include "chasm/tkm.hpp"

namespace chasm {

const double kC31 = 2.0 * std::numbers::pi * std::numbers::pi;

namespace {

void check_c31() {
  static const bool ok = std::abs(coulomb_constant(3, 1.0) - kC31) <= 1e-13 * kC31;
  if (!ok) throw std::logic_error("c_{3,1} does not match its Gamma-function definition");
}

}  // namespace

PdoWorkspace::PdoWorkspace(const ConvolutionTensor& t) : conv(t) {
  check_c31();
  const std::size_t n = static_cast<std::size_t>(t.Nk);
  fs.resize(n * n * n);
  phi.resize(n * n * n);
  phase.resize(n * n * n);
  kgrid.resize(n);
  const double dk = 2.0 * t.Lk / t.Nk;
  for (std::size_t j = 0; j < n; ++j) kgrid[j] = -t.Lk + static_cast<double>(j) * dk;
}

void apply_pdo_coulomb(const double* slice, const std::array<double, 3>& x, const std::array<double, 3>& x_A,
                       double strength, double Lk, PdoWorkspace& ws, double* out) {
  const std::size_t n = ws.kgrid.size();
  if (std::abs(ws.kgrid.front() + Lk) > 1e-12 * Lk) throw std::invalid_argument("apply_pdo_coulomb: Lk mismatch");
  const double xt[3] = {x[0] - x_A[0], x[1] - x_A[1], x[2] - x_A[2]};
  std::vector<cplx> e[3];
  for (int m = 0; m < 3; ++m) {
    e[m].resize(n);
    for (std::size_t j = 0; j < n; ++j) e[m][j] = std::polar(1.0, -2.0 * xt[m] * ws.kgrid[j]);
  }
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b) {
      const cplx eab = e[0][a] * e[1][b];
      cplx* ph = ws.phase.data() + (a * n + b) * n;
      for (std::size_t c = 0; c < n; ++c) ph[c] = eab * e[2][c];
    }
  const std::size_t K = n * n * n;
  for (std::size_t q = 0; q < K; ++q) ws.fs[q] = slice[q] * ws.phase[q];
  ws.conv.convolve(ws.fs.data(), ws.phi.data());
  // z = e^{2i x~.k} (U * fs); 2 Re(I+) = (4 / c31) Im(z).
  const double coef = -strength * 4.0 / kC31;
  if (!ws.check_residue) {
    for (std::size_t q = 0; q < K; ++q) out[q] += coef * (std::conj(ws.phase[q]) * ws.phi[q]).imag();
    return;
  }
  std::vector<cplx> zp(K);
  for (std::size_t q = 0; q < K; ++q) zp[q] = std::conj(ws.phase[q]) * ws.phi[q];
  for (std::size_t q = 0; q < K; ++q) ws.fs[q] = slice[q] * std::conj(ws.phase[q]);
  ws.conv.convolve(ws.fs.data(), ws.phi.data());
  // I+ - I- = (2/(c31 i)) (z+ - z-).
  double scale = 0.0, im_max = 0.0;
  for (std::size_t q = 0; q < K; ++q) scale = std::max(scale, (2.0 / kC31) * std::abs(zp[q]));
  std::vector<double> theta(K);
  for (std::size_t q = 0; q < K; ++q) {
    const cplx zm = ws.phase[q] * ws.phi[q];
    const cplx full = (2.0 / kC31) * cplx(0.0, -1.0) * (zp[q] - zm);
    theta[q] = -strength * full.real();
    im_max = std::max(im_max, std::abs(full.imag()));
  }
  ws.last_residue = scale > 0.0 ? im_max / scale : im_max;
  if (ws.last_residue > 1e-10) throw std::runtime_error("apply_pdo_coulomb: imaginary residue exceeds 1e-10");
  for (std::size_t q = 0; q < K; ++q) out[q] += theta[q];
}

}  // namespace chasm
