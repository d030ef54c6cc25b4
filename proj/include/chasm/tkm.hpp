#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include <fftw3.h>

namespace chasm {

using cplx = std::complex<double>;

/// 4 pi Si(|xi| D) / |xi|, with the two-term series for |xi| D < 1e-4.
double truncated_kernel_hat(double xi_norm, double D);

/// Potential of exp(-|alpha (k - k0)|^2) under the |k|^{-2} kernel.
double gaussian_convolution_reference(const std::array<double, 3>& k, double alpha, const std::array<double, 3>& k0);

/// Real convolution tensor on the window p in -Nk..Nk-1 per axis.
struct ConvolutionTensor {
  int Nk = 0;
  double Lk = 0.0;
  double D = 0.0;
  std::vector<double> T;  ///< (2Nk)^3, element (i,j,l) at ((i+Nk)*2Nk + (j+Nk))*2Nk + (l+Nk)
  std::vector<cplx> T_hat;  ///< forward DFT of T in circular (index mod 2Nk) order
  double imag_residue = 0.0;  ///< max |Im| of the raw tensor relative to max |T|

  std::size_t side() const { return 2 * static_cast<std::size_t>(Nk); }
  double at(int i, int j, int l) const {
    const std::size_t s = side();
    return T[((static_cast<std::size_t>(i + Nk) * s) + static_cast<std::size_t>(j + Nk)) * s +
             static_cast<std::size_t>(l + Nk)];
  }
};

/// One (3Nk)^3 backward FFT of the kernel symbol, restricted to the
/// (2Nk)^3 window. D = 2 sqrt(3) Lk.
ConvolutionTensor build_convolution_tensor(int Nk, double Lk);

/// Binary cache with the "TKMT" header. load returns false when the file is
/// missing or was built for different (Nk, Lk).
void save_convolution_tensor(const std::string& path, const ConvolutionTensor& t);
bool load_convolution_tensor(const std::string& path, int Nk, double Lk, ConvolutionTensor& out);

/// Zero-padded (2Nk)^3 FFT convolution with pruned transforms. Owns its
/// buffers and plans; one instance per worker.
class Convolver {
 public:
  explicit Convolver(const ConvolutionTensor& t);
  ~Convolver();
  Convolver(const Convolver&) = delete;
  Convolver& operator=(const Convolver&) = delete;

  /// out_i = sum_{i'} T_{i-i'} fs_{i'} over the Nk^3 window.
  void convolve(const cplx* fs, cplx* out);
  int Nk() const { return Nk_; }

 private:
  const ConvolutionTensor& t_;
  int Nk_;
  std::size_t L_;
  fftw_complex* buf_;
  fftw_plan fwd_[3];
  fftw_plan bwd_[3];
};

std::vector<cplx> convolve_truncated(const ConvolutionTensor& t, const std::vector<cplx>& fs);

/// c_{3,1} = 2 pi^2.
extern const double kC31;

/// Per-worker scratch for the Coulomb operator.
struct PdoWorkspace {
  explicit PdoWorkspace(const ConvolutionTensor& t);
  Convolver conv;
  std::vector<cplx> fs;
  std::vector<cplx> phi;
  std::vector<cplx> phase;  ///< e^{-2i x~.k}
  std::vector<double> kgrid;
  /// When set, I^- is evaluated separately and the imaginary part of
  /// I^+ - I^- is checked against 1e-10 relative.
  bool check_residue = false;
  double last_residue = 0.0;
};

/// Theta at one spatial point for V(x) = -strength / |x - x_A|:
///   Theta = -strength * 2 Re(I+),  I+ = (2/(c31 i)) e^{2i x~.k} (U * f e^{-2i x~.k})(k),
/// accumulated into out (out += Theta).
void apply_pdo_coulomb(const double* slice, const std::array<double, 3>& x, const std::array<double, 3>& x_A,
                       double strength, double Lk, PdoWorkspace& ws, double* out);

/// Spectral k-derivative operator for V = omega x^2 / 2 in one dimension:
/// Theta = omega x df/dk.
class HarmonicPdo {
 public:
  HarmonicPdo(int Nk, double Lk);
  ~HarmonicPdo();
  HarmonicPdo(const HarmonicPdo&) = delete;
  HarmonicPdo& operator=(const HarmonicPdo&) = delete;

  /// out = omega * x * d(slice)/dk over one k-line of length Nk.
  void apply(const double* slice, double x, double omega, double* out);

 private:
  int Nk_;
  double Lk_;
  double* in_;
  fftw_complex* spec_;
  fftw_plan fwd_;
  fftw_plan bwd_;
};

}  // namespace chasm
