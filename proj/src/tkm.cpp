#include "chasm/tkm.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <mutex>
#include <numbers>
#include <stdexcept>

#include "chasm/special_functions.hpp"

namespace chasm {

namespace {

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

double truncated_kernel_hat(double xi_norm, double D) {
  const double pi = std::numbers::pi;
  if (xi_norm * D < 1e-4) return 4.0 * D * pi - (2.0 / 9.0) * D * D * D * pi * xi_norm * xi_norm;
  return 4.0 * pi * sine_integral(xi_norm * D) / xi_norm;
}

double gaussian_convolution_reference(const std::array<double, 3>& k, double alpha, const std::array<double, 3>& k0) {
  if (!(alpha > 0.0)) throw std::invalid_argument("gaussian_convolution_reference: alpha must be positive");
  double r2 = 0.0;
  for (int m = 0; m < 3; ++m) {
    const double q = alpha * (k[m] - k0[m]);
    r2 += q * q;
  }
  return 2.0 * std::pow(std::numbers::pi, 1.5) * dawson_over_x(std::sqrt(r2)) / alpha;
}

ConvolutionTensor build_convolution_tensor(int Nk, double Lk) {
  if (Nk < 2 || Nk % 2 != 0) throw std::invalid_argument("build_convolution_tensor: Nk must be even");
  if (!(Lk > 0.0)) throw std::invalid_argument("build_convolution_tensor: Lk must be positive");
  ConvolutionTensor t;
  t.Nk = Nk;
  t.Lk = Lk;
  t.D = 2.0 * std::sqrt(3.0) * Lk;
  const std::size_t n = 3 * static_cast<std::size_t>(Nk);
  const long long half = static_cast<long long>(n / 2);
  const double dxi = 2.0 * std::numbers::pi / (6.0 * Lk);

  // The symbol depends on |n|^2 only; tabulate it once per integer norm.
  const std::size_t max_r2 = static_cast<std::size_t>(3 * half * half);
  std::vector<double> symbol(max_r2 + 1);
  for (std::size_t r2 = 0; r2 <= max_r2; ++r2)
    symbol[r2] = truncated_kernel_hat(dxi * std::sqrt(static_cast<double>(r2)), t.D);

  fftw_complex* big = fftw_alloc_complex(n * n * n);
  if (!big) throw std::bad_alloc();
  auto wrap = [&](long long v) { return static_cast<std::size_t>((v % static_cast<long long>(n) + n) % n); };
  for (long long a = -half; a < half; ++a)
    for (long long b = -half; b < half; ++b) {
      const std::size_t base = (wrap(a) * n + wrap(b)) * n;
      for (long long c = -half; c < half; ++c) {
        const std::size_t r2 = static_cast<std::size_t>(a * a + b * b + c * c);
        big[base + wrap(c)][0] = symbol[r2];
        big[base + wrap(c)][1] = 0.0;
      }
    }
  {
    fftw_plan plan;
    {
      std::lock_guard<std::mutex> lock(planner_mutex());
      plan = fftw_plan_dft_3d(static_cast<int>(n), static_cast<int>(n), static_cast<int>(n), big, big,
                              FFTW_BACKWARD, FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(plan);
  }
  const double scale = 1.0 / static_cast<double>(n * n * n);
  const std::size_t s = t.side();
  t.T.assign(s * s * s, 0.0);
  double tmax = 0.0, imax = 0.0;
  for (int i = -Nk; i < Nk; ++i)
    for (int j = -Nk; j < Nk; ++j)
      for (int l = -Nk; l < Nk; ++l) {
        const std::size_t src = (wrap(i) * n + wrap(j)) * n + wrap(l);
        const double re = big[src][0] * scale;
        const double im = big[src][1] * scale;
        t.T[((static_cast<std::size_t>(i + Nk) * s) + static_cast<std::size_t>(j + Nk)) * s +
            static_cast<std::size_t>(l + Nk)] = re;
        tmax = std::max(tmax, std::abs(re));
        imax = std::max(imax, std::abs(im));
      }
  fftw_free(big);
  t.imag_residue = tmax > 0.0 ? imax / tmax : imax;
  if (t.imag_residue > 1e-11) throw std::runtime_error("build_convolution_tensor: imaginary residue too large");

  // Circular arrangement (index mod 2Nk) and its forward transform.
  fftw_complex* circ = fftw_alloc_complex(s * s * s);
  if (!circ) throw std::bad_alloc();
  auto cw = [&](int v) { return static_cast<std::size_t>((v + static_cast<int>(s)) % static_cast<int>(s)); };
  for (int i = -Nk; i < Nk; ++i)
    for (int j = -Nk; j < Nk; ++j)
      for (int l = -Nk; l < Nk; ++l) {
        const std::size_t dst = (cw(i) * s + cw(j)) * s + cw(l);
        circ[dst][0] = t.at(i, j, l);
        circ[dst][1] = 0.0;
      }
  {
    fftw_plan plan;
    {
      std::lock_guard<std::mutex> lock(planner_mutex());
      plan = fftw_plan_dft_3d(static_cast<int>(s), static_cast<int>(s), static_cast<int>(s), circ, circ,
                              FFTW_FORWARD, FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(plan);
  }
  t.T_hat.resize(s * s * s);
  for (std::size_t q = 0; q < s * s * s; ++q) t.T_hat[q] = cplx(circ[q][0], circ[q][1]);
  fftw_free(circ);
  return t;
}

namespace {

constexpr std::uint32_t kTensorVersion = 1;

template <class T>
void put(std::ostream& os, T v) {
  static_assert(std::endian::native == std::endian::little, "little-endian host required");
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  return v;
}

}  // namespace

void save_convolution_tensor(const std::string& path, const ConvolutionTensor& t) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("save_convolution_tensor: cannot open " + path);
  os.write("TKMT", 4);
  put<std::uint32_t>(os, kTensorVersion);
  put<std::uint32_t>(os, 3);
  put<std::uint32_t>(os, 0);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(t.Nk));
  put<std::uint32_t>(os, 8);
  put<double>(os, -t.Lk);
  put<double>(os, t.Lk);
  put<double>(os, t.D);
  put<double>(os, t.imag_residue);
  os.write(reinterpret_cast<const char*>(t.T.data()), static_cast<std::streamsize>(t.T.size() * sizeof(double)));
  os.write(reinterpret_cast<const char*>(t.T_hat.data()),
           static_cast<std::streamsize>(t.T_hat.size() * sizeof(cplx)));
  if (!os) throw std::runtime_error("save_convolution_tensor: write failed");
}

bool load_convolution_tensor(const std::string& path, int Nk, double Lk, ConvolutionTensor& out) {
  std::ifstream is(path, std::ios::binary);
  if (!is) return false;
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "TKMT", 4) != 0) return false;
  if (get<std::uint32_t>(is) != kTensorVersion) return false;
  if (get<std::uint32_t>(is) != 3) return false;
  get<std::uint32_t>(is);
  const auto nk = get<std::uint32_t>(is);
  const auto width = get<std::uint32_t>(is);
  get<double>(is);
  const double lk = get<double>(is);
  const double D = get<double>(is);
  const double res = get<double>(is);
  if (!is || static_cast<int>(nk) != Nk || lk != Lk || width != 8) return false;
  ConvolutionTensor t;
  t.Nk = Nk;
  t.Lk = Lk;
  t.D = D;
  t.imag_residue = res;
  const std::size_t s = t.side();
  t.T.resize(s * s * s);
  t.T_hat.resize(s * s * s);
  is.read(reinterpret_cast<char*>(t.T.data()), static_cast<std::streamsize>(t.T.size() * sizeof(double)));
  is.read(reinterpret_cast<char*>(t.T_hat.data()), static_cast<std::streamsize>(t.T_hat.size() * sizeof(cplx)));
  if (!is) return false;
  out = std::move(t);
  return true;
}

Convolver::Convolver(const ConvolutionTensor& t) : t_(t), Nk_(t.Nk), L_(t.side()) {
  const int L = static_cast<int>(L_);
  const int Nk = Nk_;
  buf_ = fftw_alloc_complex(L_ * L_ * L_);
  if (!buf_) throw std::bad_alloc();
  std::lock_guard<std::mutex> lock(planner_mutex());
  // Pruned forward: only the first Nk entries along each axis are nonzero
  // before the corresponding pass.
  fftw_iodim d2{L, 1, 1};
  fftw_iodim hm2[2] = {{Nk, L * L, L * L}, {Nk, L, L}};
  fftw_iodim d1{L, L, L};
  fftw_iodim hm1[2] = {{Nk, L * L, L * L}, {L, 1, 1}};
  fftw_iodim d0{L, L * L, L * L};
  fftw_iodim hm0[1] = {{L * L, 1, 1}};
  fwd_[0] = fftw_plan_guru_dft(1, &d2, 2, hm2, buf_, buf_, FFTW_FORWARD, FFTW_ESTIMATE);
  fwd_[1] = fftw_plan_guru_dft(1, &d1, 2, hm1, buf_, buf_, FFTW_FORWARD, FFTW_ESTIMATE);
  fwd_[2] = fftw_plan_guru_dft(1, &d0, 1, hm0, buf_, buf_, FFTW_FORWARD, FFTW_ESTIMATE);
  // Pruned backward: only the first Nk outputs per axis are kept.
  bwd_[0] = fftw_plan_guru_dft(1, &d0, 1, hm0, buf_, buf_, FFTW_BACKWARD, FFTW_ESTIMATE);
  bwd_[1] = fftw_plan_guru_dft(1, &d1, 2, hm1, buf_, buf_, FFTW_BACKWARD, FFTW_ESTIMATE);
  bwd_[2] = fftw_plan_guru_dft(1, &d2, 2, hm2, buf_, buf_, FFTW_BACKWARD, FFTW_ESTIMATE);
  for (auto* p : {&fwd_[0], &fwd_[1], &fwd_[2], &bwd_[0], &bwd_[1], &bwd_[2]})
    if (!*p) throw std::runtime_error("Convolver: FFTW planning failed");
}

Convolver::~Convolver() {
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    for (int i = 0; i < 3; ++i) {
      fftw_destroy_plan(fwd_[i]);
      fftw_destroy_plan(bwd_[i]);
    }
  }
  fftw_free(buf_);
}

void Convolver::convolve(const cplx* fs, cplx* out) {
  const std::size_t L = L_, n = static_cast<std::size_t>(Nk_);
  std::memset(static_cast<void*>(buf_), 0, sizeof(fftw_complex) * L * L * L);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b)
      std::memcpy(static_cast<void*>(buf_ + (a * L + b) * L), fs + (a * n + b) * n, n * sizeof(cplx));
  for (auto& p : fwd_) fftw_execute(p);
  const cplx* th = t_.T_hat.data();
  cplx* z = reinterpret_cast<cplx*>(buf_);
  for (std::size_t q = 0; q < L * L * L; ++q) z[q] *= th[q];
  for (auto& p : bwd_) fftw_execute(p);
  const double scale = 1.0 / static_cast<double>(L * L * L);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b) {
      const cplx* src = z + (a * L + b) * L;
      cplx* dst = out + (a * n + b) * n;
      for (std::size_t c = 0; c < n; ++c) dst[c] = src[c] * scale;
    }
}

std::vector<cplx> convolve_truncated(const ConvolutionTensor& t, const std::vector<cplx>& fs) {
  const std::size_t n = static_cast<std::size_t>(t.Nk);
  if (fs.size() != n * n * n) throw std::invalid_argument("convolve_truncated: expected Nk^3 entries");
  Convolver c(t);
  std::vector<cplx> out(fs.size());
  c.convolve(fs.data(), out.data());
  return out;
}

HarmonicPdo::HarmonicPdo(int Nk, double Lk) : Nk_(Nk), Lk_(Lk) {
  in_ = fftw_alloc_real(static_cast<std::size_t>(Nk));
  spec_ = fftw_alloc_complex(static_cast<std::size_t>(Nk / 2 + 1));
  std::lock_guard<std::mutex> lock(planner_mutex());
  fwd_ = fftw_plan_dft_r2c_1d(Nk, in_, spec_, FFTW_ESTIMATE);
  bwd_ = fftw_plan_dft_c2r_1d(Nk, spec_, in_, FFTW_ESTIMATE);
}

HarmonicPdo::~HarmonicPdo() {
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(fwd_);
    fftw_destroy_plan(bwd_);
  }
  fftw_free(in_);
  fftw_free(spec_);
}

void HarmonicPdo::apply(const double* slice, double x, double omega, double* out) {
  const int n = Nk_;
  std::copy(slice, slice + n, in_);
  fftw_execute(fwd_);
  const double base = std::numbers::pi / Lk_;
  for (int m = 0; m < n / 2; ++m) {
    const double xi = base * m;
    const double re = spec_[m][0], im = spec_[m][1];
    spec_[m][0] = -xi * im;
    spec_[m][1] = xi * re;
  }
  spec_[n / 2][0] = 0.0;
  spec_[n / 2][1] = 0.0;
  fftw_execute(bwd_);
  const double scale = omega * x / n;
  for (int j = 0; j < n; ++j) out[j] = scale * in_[j];
}

}  // namespace chasm
