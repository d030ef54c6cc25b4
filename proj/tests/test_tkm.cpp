#include <doctest.h>

#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <numbers>
#include <random>
#include <vector>

#include "chasm/special_functions.hpp"
#include "chasm/tkm.hpp"

using namespace chasm;

namespace {

// T_p = (3Nk)^{-3} sum_n U_hat(|xi_n|) exp(2 pi i n.p / (3Nk)), n in [-3Nk/2, 3Nk/2)^3.
std::vector<double> direct_tensor(int Nk, double Lk) {
  const int n = 3 * Nk, half = n / 2;
  const double D = 2.0 * std::sqrt(3.0) * Lk;
  const double dxi = 2.0 * std::numbers::pi / (6.0 * Lk);
  std::vector<double> U(static_cast<std::size_t>(n) * n * n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c) {
        const double r = dxi * std::sqrt(double((a - half) * (a - half) + (b - half) * (b - half) + (c - half) * (c - half)));
        U[(a * n + b) * n + c] = truncated_kernel_hat(r, D);
      }
  // Phase tables e[p][m] = exp(2 pi i (m - half) p / n).
  const int s = 2 * Nk;
  std::vector<std::complex<double>> e(static_cast<std::size_t>(s) * n);
  for (int p = -Nk; p < Nk; ++p)
    for (int m = 0; m < n; ++m) e[(p + Nk) * n + m] = std::polar(1.0, 2.0 * std::numbers::pi * (m - half) * p / n);
  std::vector<double> T(static_cast<std::size_t>(s) * s * s);
  std::vector<std::complex<double>> tmp1(static_cast<std::size_t>(n) * n), tmp2(n);
  for (int i = 0; i < s; ++i) {
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c) {
        std::complex<double> acc = 0.0;
        for (int a = 0; a < n; ++a) acc += e[i * n + a] * U[(a * n + b) * n + c];
        tmp1[b * n + c] = acc;
      }
    for (int j = 0; j < s; ++j) {
      for (int c = 0; c < n; ++c) {
        std::complex<double> acc = 0.0;
        for (int b = 0; b < n; ++b) acc += e[j * n + b] * tmp1[b * n + c];
        tmp2[c] = acc;
      }
      for (int l = 0; l < s; ++l) {
        std::complex<double> acc = 0.0;
        for (int c = 0; c < n; ++c) acc += e[l * n + c] * tmp2[c];
        T[(i * s + j) * s + l] = acc.real() / (double(n) * n * n);
      }
    }
  }
  return T;
}

std::vector<cplx> direct_convolution(const ConvolutionTensor& t, const std::vector<cplx>& fs) {
  const int n = t.Nk;
  std::vector<cplx> out(fs.size());
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c) {
        cplx acc = 0.0;
        for (int a2 = 0; a2 < n; ++a2)
          for (int b2 = 0; b2 < n; ++b2)
            for (int c2 = 0; c2 < n; ++c2) acc += t.at(a - a2, b - b2, c - c2) * fs[(a2 * n + b2) * n + c2];
        out[(a * n + b) * n + c] = acc;
      }
  return out;
}

double max_abs(const std::vector<cplx>& v) {
  double m = 0.0;
  for (const cplx& z : v) m = std::max(m, std::abs(z));
  return m;
}

}  // namespace

TEST_CASE("tensor matches the direct inverse sum at Nk = 8") {
  const int Nk = 8;
  const double Lk = 4.0;
  const ConvolutionTensor t = build_convolution_tensor(Nk, Lk);
  const std::vector<double> ref = direct_tensor(Nk, Lk);
  double tmax = 0.0, err = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    tmax = std::max(tmax, std::abs(ref[i]));
    err = std::max(err, std::abs(t.T[i] - ref[i]));
  }
  CHECK(err <= 1e-13 * tmax);
  CHECK(t.imag_residue <= 1e-11);
  CHECK(t.D == doctest::Approx(2.0 * std::sqrt(3.0) * Lk));
  // Symmetric under p -> -p.
  CHECK(t.at(1, 2, -3) == doctest::Approx(t.at(-1, -2, 3)).epsilon(1e-12));
  CHECK(t.at(1, 2, 3) == doctest::Approx(t.at(3, 1, 2)).epsilon(1e-12));
}

TEST_CASE("FFT convolution equals the direct triple sum at Nk = 8") {
  const ConvolutionTensor t = build_convolution_tensor(8, 3.0);
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> N01;
  Convolver conv(t);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<cplx> fs(512);
    for (cplx& z : fs) z = cplx(N01(rng), N01(rng));
    const std::vector<cplx> ref = direct_convolution(t, fs);
    std::vector<cplx> got(fs.size());
    conv.convolve(fs.data(), got.data());
    double err = 0.0;
    for (std::size_t i = 0; i < fs.size(); ++i) err = std::max(err, std::abs(got[i] - ref[i]));
    CHECK(err <= 1e-12 * max_abs(ref));
  }
}

TEST_CASE("Gaussian convolution error decays with Nk") {
  const double Lk = 16.0;
  double prev = 1e300;
  for (int Nk : {8, 16, 32}) {
    const ConvolutionTensor t = build_convolution_tensor(Nk, Lk);
    const std::size_t n = static_cast<std::size_t>(Nk);
    const double dk = 2.0 * Lk / Nk;
    std::vector<cplx> fs(n * n * n);
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = 0; b < n; ++b)
        for (std::size_t c = 0; c < n; ++c) {
          const double k0 = -Lk + a * dk, k1 = -Lk + b * dk, k2 = -Lk + c * dk;
          fs[(a * n + b) * n + c] = std::exp(-(k0 * k0 + k1 * k1 + k2 * k2));
        }
    const std::vector<cplx> out = convolve_truncated(t, fs);
    double err = 0.0;
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = 0; b < n; ++b)
        for (std::size_t c = 0; c < n; ++c) {
          const double ref = gaussian_convolution_reference({-Lk + a * dk, -Lk + b * dk, -Lk + c * dk}, 1.0, {0, 0, 0});
          err = std::max(err, std::abs(out[(a * n + b) * n + c] - ref));
        }
    CAPTURE(Nk);
    CHECK(err < prev);
    prev = err;
  }
  CHECK(prev < 0.6);
}

TEST_CASE("tensor cache round trip") {
  const ConvolutionTensor t = build_convolution_tensor(6, 2.0);
  const std::string path = (std::filesystem::temp_directory_path() / "chasm_tensor_test.tkmt").string();
  save_convolution_tensor(path, t);
  ConvolutionTensor u;
  REQUIRE(load_convolution_tensor(path, 6, 2.0, u));
  CHECK(u.T == t.T);
  CHECK(u.T_hat == t.T_hat);
  ConvolutionTensor v;
  CHECK_FALSE(load_convolution_tensor(path, 8, 2.0, v));
  CHECK_FALSE(load_convolution_tensor(path, 6, 2.5, v));
  CHECK_FALSE(load_convolution_tensor(path + ".missing", 6, 2.0, v));
  std::filesystem::remove(path);
}

TEST_CASE("Coulomb operator is real to round-off") {
  const ConvolutionTensor t = build_convolution_tensor(16, 6.4);
  PdoWorkspace ws(t);
  ws.check_residue = true;
  const double dk = 2 * 6.4 / 16;
  std::vector<double> f(16 * 16 * 16), out(f.size(), 0.0);
  for (int a = 0; a < 16; ++a)
    for (int b = 0; b < 16; ++b)
      for (int c = 0; c < 16; ++c) {
        const double k0 = -6.4 + a * dk - 0.3, k1 = -6.4 + b * dk, k2 = -6.4 + c * dk + 0.2;
        f[(a * 16 + b) * 16 + c] = std::exp(-2.0 * (k0 * k0 + k1 * k1 + k2 * k2)) * (1.0 + 0.3 * k0);
      }
  for (const std::array<double, 3>& x : {std::array<double, 3>{0.9, -0.45, 0.0}, std::array<double, 3>{0.0, 0.0, 0.0},
                                         std::array<double, 3>{2.7, 1.8, -0.9}}) {
    apply_pdo_coulomb(f.data(), x, {0.0, 0.0, 0.0}, 1.0, 6.4, ws, out.data());
    CHECK(ws.last_residue <= 1e-10);
  }
}

TEST_CASE("Coulomb operator approaches the classical force term far from the centre") {
  // For V = -1/|x|, Theta -> grad V . grad_k f = (x / |x|^3) . grad_k f.
  const int Nk = 32;
  const double Lk = 6.4, b = 0.5;
  const ConvolutionTensor t = build_convolution_tensor(Nk, Lk);
  PdoWorkspace ws(t);
  const double dk = 2 * Lk / Nk;
  const std::array<double, 3> x{3.0, 1.0, 0.0};
  const double r = std::sqrt(10.0);
  std::vector<double> f(Nk * Nk * Nk), out(f.size(), 0.0), cls(f.size());
  for (int a = 0; a < Nk; ++a)
    for (int bb = 0; bb < Nk; ++bb)
      for (int c = 0; c < Nk; ++c) {
        const double k0 = -Lk + a * dk, k1 = -Lk + bb * dk, k2 = -Lk + c * dk;
        const double g = std::exp(-b * (k0 * k0 + k1 * k1 + k2 * k2));
        f[(a * Nk + bb) * Nk + c] = g;
        cls[(a * Nk + bb) * Nk + c] = (x[0] * (-2 * b * k0) + x[1] * (-2 * b * k1)) * g / (r * r * r);
      }
  apply_pdo_coulomb(f.data(), x, {0.0, 0.0, 0.0}, 1.0, Lk, ws, out.data());
  double dot = 0.0, nc = 0.0, nd = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    dot += out[i] * cls[i];
    nc += cls[i] * cls[i];
    nd += (out[i] - cls[i]) * (out[i] - cls[i]);
  }
  CHECK(dot > 0.0);
  CHECK(std::sqrt(nd / nc) < 0.25);
}

TEST_CASE("Coulomb operator mass identity improves with Nk") {
  // sum_k Theta[f] dk^3 vanishes in the continuum limit; RMS over a set of positions.
  double prev = 1e300;
  const double Lk = 6.4;
  for (int Nk : {8, 16, 32}) {
    const ConvolutionTensor t = build_convolution_tensor(Nk, Lk);
    PdoWorkspace ws(t);
    const double dk = 2 * Lk / Nk;
    std::vector<double> f(static_cast<std::size_t>(Nk) * Nk * Nk);
    for (int a = 0; a < Nk; ++a)
      for (int b = 0; b < Nk; ++b)
        for (int c = 0; c < Nk; ++c) {
          const double k0 = -Lk + a * dk - 0.3, k1 = -Lk + b * dk + 0.2, k2 = -Lk + c * dk;
          f[(static_cast<std::size_t>(a) * Nk + b) * Nk + c] = std::exp(-(k0 * k0 + k1 * k1 + k2 * k2));
        }
    double rms = 0.0;
    int n = 0;
    for (double x0 : {-1.2, -0.4, 0.3, 0.9, 1.6})
      for (double x1 : {-0.8, 0.5}) {
        std::vector<double> out(f.size(), 0.0);
        apply_pdo_coulomb(f.data(), {x0, x1, 0.25}, {0.0, 0.0, 0.0}, 1.0, Lk, ws, out.data());
        double s = 0.0;
        for (double v : out) s += v;
        s *= dk * dk * dk;
        rms += s * s;
        ++n;
      }
    rms = std::sqrt(rms / n);
    CAPTURE(Nk);
    CHECK(rms < prev);
    prev = rms;
  }
}

TEST_CASE("harmonic operator is spectral differentiation in k") {
  const int Nk = 64;
  const double Lk = 6.4;
  HarmonicPdo op(Nk, Lk);
  std::vector<double> f(Nk), out(Nk);
  const double dk = 2 * Lk / Nk;
  for (int j = 0; j < Nk; ++j) {
    const double k = -Lk + j * dk;
    f[j] = std::exp(-2 * (k - 0.3) * (k - 0.3));
  }
  const double omega = 0.4, x = 1.7;
  op.apply(f.data(), x, omega, out.data());
  for (int j = 0; j < Nk; ++j) {
    const double k = -Lk + j * dk;
    const double ref = omega * x * (-4 * (k - 0.3)) * f[j];
    CHECK(out[j] == doctest::Approx(ref).scale(1.0).epsilon(1e-12));
  }
}
