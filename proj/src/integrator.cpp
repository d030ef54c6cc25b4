#include "chasm/integrator.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

namespace chasm {

void validate_step_config(const StepConfig& cfg, const PhaseSpaceGrid& grid) {
  if (!std::isfinite(cfg.tau)) throw std::invalid_argument("step config: tau must be finite");
  // The largest |k| on the grid is Lk (at j = 0).
  if (!(grid.Lk * std::abs(cfg.tau) < grid.h))
    throw std::invalid_argument("step config: CFL violation, Lk * |tau| must be < h");
  if (cfg.potential == PotentialKind::Harmonic && grid.dim != 1)
    throw std::invalid_argument("step config: harmonic potential requires dim = 1");
  if (cfg.potential == PotentialKind::Coulomb && grid.dim != 3)
    throw std::invalid_argument("step config: Coulomb potential requires dim = 3");
  if (cfg.potential == PotentialKind::Coulomb && cfg.centers.empty())
    throw std::invalid_argument("step config: Coulomb potential needs at least one center");
}

void ZeroPdo::apply_point(const double*, const double*, double* out) {
  for (std::size_t q = 0; q < K_; ++q) out[q] = 0.0;
}

void CoulombPdoApplier::apply_point(const double* slice, const double* x, double* out) {
  const std::size_t K = ws_.fs.size();
  for (std::size_t q = 0; q < K; ++q) out[q] = 0.0;
  const std::array<double, 3> xp{x[0], x[1], x[2]};
  for (const CoulombCenter& c : centers_) apply_pdo_coulomb(slice, xp, c.x, c.strength, Lk_, ws_, out);
}

PdoFactory make_pdo_factory(const PhaseSpaceGrid& g, const StepConfig& cfg, const ConvolutionTensor* tensor) {
  switch (cfg.potential) {
    case PotentialKind::Free: {
      const std::size_t K = g.k_size();
      return [K] { return std::make_unique<ZeroPdo>(K); };
    }
    case PotentialKind::Harmonic: {
      if (g.dim != 1) throw std::invalid_argument("harmonic potential requires dim = 1");
      const double omega = cfg.omega;
      return [g, omega] { return std::make_unique<HarmonicPdoApplier>(g, omega); };
    }
    case PotentialKind::Coulomb: {
      if (!tensor) throw std::invalid_argument("Coulomb potential requires a convolution tensor");
      if (tensor->Nk != g.Nk || tensor->Lk != g.Lk) throw std::invalid_argument("convolution tensor grid mismatch");
      auto centers = cfg.centers;
      return [tensor, centers] { return std::make_unique<CoulombPdoApplier>(*tensor, centers); };
    }
  }
  throw std::logic_error("unknown potential");
}

namespace {

inline void spatial_position(const PhaseSpaceGrid& g, std::size_t sp, double* x) {
  const std::size_t n = g.nx_points();
  for (int a = g.dim - 1; a >= 0; --a) {
    x[a] = g.x(static_cast<int>(sp % n));
    sp /= n;
  }
}

}  // namespace

template <class Real>
void apply_pdo(const FieldT<Real>& f, PdoApplier& op, std::vector<double>& theta) {
  const PhaseSpaceGrid& g = f.grid;
  const std::size_t K = g.k_size();
  theta.resize(g.size());
  std::vector<double> in(K);
  double x[3] = {0.0, 0.0, 0.0};
  for (std::size_t sp = 0; sp < g.spatial_size(); ++sp) {
    const Real* s = f.slice(sp);
    for (std::size_t q = 0; q < K; ++q) in[q] = static_cast<double>(s[q]);
    spatial_position(g, sp, x);
    op.apply_point(in.data(), x, theta.data() + sp * K);
  }
}

template void apply_pdo<double>(const FieldT<double>&, PdoApplier&, std::vector<double>&);
template void apply_pdo<float>(const FieldT<float>&, PdoApplier&, std::vector<double>&);

std::vector<double> axis_tap_weights(const PhaseSpaceGrid& g, int axis, double tau) {
  const std::size_t K = g.k_size();
  const std::size_t nk = static_cast<std::size_t>(g.Nk);
  std::size_t stride = 1;
  for (int a = axis + 1; a < g.dim; ++a) stride *= nk;
  std::vector<double> w(5 * K);
  double t[5];
  for (std::size_t q = 0; q < K; ++q) {
    const int j = static_cast<int>((q / stride) % nk);
    tap_weights(g.k(j) * tau / g.h, t);
    for (int m = 0; m < 5; ++m) w[static_cast<std::size_t>(m) * K + q] = t[m];
  }
  return w;
}

void shift_block(const SplineSolver& solver, const double* samples, const double* top, const double* bottom,
                 std::size_t ncols, const double* weights, double* eta, double* rhs, double* out) {
  const std::size_t N = static_cast<std::size_t>(solver.N());
  std::memcpy(rhs, top, ncols * sizeof(double));
  std::memcpy(rhs + ncols, samples, (N + 1) * ncols * sizeof(double));
  std::memcpy(rhs + (N + 2) * ncols, bottom, ncols * sizeof(double));
  solver.solve(rhs, eta, ncols);
  interpolate_shifted_columns(eta, solver.N(), ncols, weights, out);
}

GlobalAdvector::GlobalAdvector(const PhaseSpaceGrid& g, double tau, const BoundaryCondition& bc)
    : g_(g), bc_(bc), solver_(g.Nx, g.h, bc.kind) {
  if (!(g.Lk * std::abs(tau) < g.h)) throw std::invalid_argument("advect: CFL violation, Lk * |tau| must be < h");
  for (int a = 0; a < g.dim; ++a) weights_[a] = axis_tap_weights(g, a, tau);
}

namespace {

template <class Real>
void gather_line(const Real* field, std::size_t base, std::size_t stride, std::size_t rows, std::size_t K,
                 double* dst) {
  for (std::size_t r = 0; r < rows; ++r) {
    const Real* src = field + (base + r * stride) * K;
    double* d = dst + r * K;
    for (std::size_t q = 0; q < K; ++q) d[q] = static_cast<double>(src[q]);
  }
}

template <class Real>
void scatter_line(Real* field, std::size_t base, std::size_t stride, std::size_t rows, std::size_t K,
                  const double* src) {
  for (std::size_t r = 0; r < rows; ++r) {
    Real* d = field + (base + r * stride) * K;
    const double* s = src + r * K;
    for (std::size_t q = 0; q < K; ++q) d[q] = static_cast<Real>(s[q]);
  }
}

}  // namespace

template <class Real>
void GlobalAdvector::advect(const std::vector<Real*>& fields, const std::vector<double*>& extra) {
  const std::size_t n = g_.nx_points();
  const std::size_t K = g_.k_size();
  std::vector<double> line(n * K), eta((n + 2) * K), rhs((n + 2) * K), out(n * K);
  std::vector<double> top(K, bc_.kind == BcKind::Hermite ? bc_.phi_L : 0.0);
  std::vector<double> bottom(K, bc_.kind == BcKind::Hermite ? bc_.phi_R : 0.0);
  for (int a = 0; a < g_.dim; ++a) {
    std::size_t stride = 1;
    for (int b = a + 1; b < g_.dim; ++b) stride *= n;
    std::size_t outer = 1;
    for (int b = 0; b < a; ++b) outer *= n;
    const double* w = weights_[a].data();
    for (std::size_t o = 0; o < outer; ++o)
      for (std::size_t i = 0; i < stride; ++i) {
        const std::size_t base = o * n * stride + i;
        for (Real* f : fields) {
          gather_line(f, base, stride, n, K, line.data());
          shift_block(solver_, line.data(), top.data(), bottom.data(), K, w, eta.data(), rhs.data(), out.data());
          scatter_line(f, base, stride, n, K, out.data());
        }
        for (double* f : extra) {
          gather_line(f, base, stride, n, K, line.data());
          shift_block(solver_, line.data(), top.data(), bottom.data(), K, w, eta.data(), rhs.data(), out.data());
          scatter_line(f, base, stride, n, K, out.data());
        }
      }
  }
}

template void GlobalAdvector::advect<double>(const std::vector<double*>&, const std::vector<double*>&);
template void GlobalAdvector::advect<float>(const std::vector<float*>&, const std::vector<double*>&);

template <class Real>
void advect(FieldT<Real>& f, double tau, const BoundaryCondition& bc) {
  GlobalAdvector adv(f.grid, tau, bc);
  adv.advect<Real>({f.values.data()});
}

template void advect<double>(FieldT<double>&, double, const BoundaryCondition&);
template void advect<float>(FieldT<float>&, double, const BoundaryCondition&);

void advect_tensor_stencil(WignerField& f, double tau, const BoundaryCondition& bc) {
  const PhaseSpaceGrid& g = f.grid;
  if (g.dim != 3) throw std::invalid_argument("advect_tensor_stencil: requires dim = 3");
  if (bc.kind == BcKind::Hermite && (bc.phi_L != 0.0 || bc.phi_R != 0.0))
    throw std::invalid_argument("advect_tensor_stencil: only homogeneous boundary rows are supported");
  if (!(g.Lk * std::abs(tau) < g.h)) throw std::invalid_argument("advect: CFL violation, Lk * |tau| must be < h");
  const std::size_t n = g.nx_points();
  const std::size_t m = n + 2;  // coefficient indices -1..N+1
  const std::size_t K = g.k_size();
  SplineSolver solver(g.Nx, g.h, bc.kind);
  std::vector<double> zero(K, 0.0), line(n * K), rhs(m * K), eta(m * K);

  // Coefficients along axis 2, then 1, then 0; dims grow from n to m.
  std::vector<double> c2(n * n * m * K);
  for (std::size_t i0 = 0; i0 < n; ++i0)
    for (std::size_t i1 = 0; i1 < n; ++i1) {
      const double* src = f.values.data() + ((i0 * n + i1) * n) * K;
      std::memcpy(rhs.data(), zero.data(), K * sizeof(double));
      std::memcpy(rhs.data() + K, src, n * K * sizeof(double));
      std::memcpy(rhs.data() + (n + 1) * K, zero.data(), K * sizeof(double));
      solver.solve(rhs.data(), c2.data() + ((i0 * n + i1) * m) * K, K);
    }
  std::vector<double> c1(n * m * m * K);
  for (std::size_t i0 = 0; i0 < n; ++i0)
    for (std::size_t v2 = 0; v2 < m; ++v2) {
      std::memcpy(rhs.data(), zero.data(), K * sizeof(double));
      for (std::size_t i1 = 0; i1 < n; ++i1)
        std::memcpy(rhs.data() + (i1 + 1) * K, c2.data() + ((i0 * n + i1) * m + v2) * K, K * sizeof(double));
      std::memcpy(rhs.data() + (n + 1) * K, zero.data(), K * sizeof(double));
      solver.solve(rhs.data(), eta.data(), K);
      for (std::size_t v1 = 0; v1 < m; ++v1)
        std::memcpy(c1.data() + ((i0 * m + v1) * m + v2) * K, eta.data() + v1 * K, K * sizeof(double));
    }
  c2.clear();
  c2.shrink_to_fit();
  // Zero-padded layout with ghosts -2 and N+2: side m + 2.
  const std::size_t P = m + 2;
  std::vector<double> c(P * P * P * K, 0.0);
  for (std::size_t v1 = 0; v1 < m; ++v1)
    for (std::size_t v2 = 0; v2 < m; ++v2) {
      std::memcpy(rhs.data(), zero.data(), K * sizeof(double));
      for (std::size_t i0 = 0; i0 < n; ++i0)
        std::memcpy(rhs.data() + (i0 + 1) * K, c1.data() + ((i0 * m + v1) * m + v2) * K, K * sizeof(double));
      std::memcpy(rhs.data() + (n + 1) * K, zero.data(), K * sizeof(double));
      solver.solve(rhs.data(), eta.data(), K);
      for (std::size_t v0 = 0; v0 < m; ++v0)
        std::memcpy(c.data() + (((v0 + 1) * P + (v1 + 1)) * P + (v2 + 1)) * K, eta.data() + v0 * K,
                    K * sizeof(double));
    }
  c1.clear();
  c1.shrink_to_fit();

  // Per column: four active taps per axis and the matching start offset.
  std::array<std::vector<double>, 3> w4;
  std::vector<std::ptrdiff_t> off(K, 0);
  for (int a = 0; a < 3; ++a) {
    const std::vector<double> w5 = axis_tap_weights(g, a, tau);
    w4[a].assign(4 * K, 0.0);
    const std::size_t stride_a = a == 0 ? P * P * K : (a == 1 ? P * K : K);
    for (std::size_t q = 0; q < K; ++q) {
      const bool neg = w5[q] == 0.0 && w5[4 * K + q] != 0.0;
      const std::size_t s = neg ? 1 : 0;
      for (std::size_t t = 0; t < 4; ++t) w4[a][t * K + q] = w5[(s + t) * K + q];
      off[q] += static_cast<std::ptrdiff_t>(s * stride_a);
    }
  }
  std::vector<double> acc(K);
  for (std::size_t j0 = 0; j0 < n; ++j0)
    for (std::size_t j1 = 0; j1 < n; ++j1)
      for (std::size_t j2 = 0; j2 < n; ++j2) {
        std::fill(acc.begin(), acc.end(), 0.0);
        // Padded index of coefficient nu is nu + 2; the window starts at nu = j - 2.
        for (std::size_t t0 = 0; t0 < 4; ++t0)
          for (std::size_t t1 = 0; t1 < 4; ++t1)
            for (std::size_t t2 = 0; t2 < 4; ++t2) {
              const double* base = c.data() + (((j0 + t0) * P + (j1 + t1)) * P + (j2 + t2)) * K;
              const double* a0 = w4[0].data() + t0 * K;
              const double* a1 = w4[1].data() + t1 * K;
              const double* a2 = w4[2].data() + t2 * K;
              for (std::size_t q = 0; q < K; ++q) acc[q] += a0[q] * a1[q] * a2[q] * base[off[q] + static_cast<std::ptrdiff_t>(q)];
            }
        std::memcpy(f.values.data() + ((j0 * n + j1) * n + j2) * K, acc.data(), K * sizeof(double));
      }
}

template <class Real>
GlobalStepper<Real>::GlobalStepper(const PhaseSpaceGrid& g, const StepConfig& cfg, std::unique_ptr<PdoApplier> op)
    : g_(g), cfg_(cfg), op_(std::move(op)), adv_(g, cfg.tau, cfg.bc) {
  validate_step_config(cfg, g);
  if (!op_) throw std::invalid_argument("GlobalStepper: null operator");
}

template <class Real>
void GlobalStepper<Real>::step(FieldT<Real>& f) {
  if (!(f.grid == g_)) throw std::invalid_argument("GlobalStepper: grid mismatch");
  const double tau = cfg_.tau;
  if (op_->is_zero()) {
    adv_.template advect<Real>({f.values.data()});
    f.time += tau;
    return;
  }
  const std::size_t K = g_.k_size();
  apply_pdo(f, *op_, theta_);
  adv_.template advect<Real>({f.values.data()}, {theta_.data()});
  pred_.resize(f.values.size());
  for (std::size_t i = 0; i < f.values.size(); ++i) {
    const double af = static_cast<double>(f.values[i]);
    pred_[i] = static_cast<Real>(af + tau * theta_[i]);
    f.values[i] = static_cast<Real>(af + 0.5 * tau * theta_[i]);
  }
  tmp_in_.resize(K);
  tmp_out_.resize(K);
  double x[3] = {0.0, 0.0, 0.0};
  const std::size_t n = g_.nx_points();
  for (std::size_t sp = 0; sp < g_.spatial_size(); ++sp) {
    for (std::size_t q = 0; q < K; ++q) tmp_in_[q] = static_cast<double>(pred_[sp * K + q]);
    std::size_t r = sp;
    for (int a = g_.dim - 1; a >= 0; --a) {
      x[a] = g_.x(static_cast<int>(r % n));
      r /= n;
    }
    op_->apply_point(tmp_in_.data(), x, tmp_out_.data());
    Real* dst = f.slice(sp);
    for (std::size_t q = 0; q < K; ++q) dst[q] = static_cast<Real>(static_cast<double>(dst[q]) + 0.5 * tau * tmp_out_[q]);
  }
  f.time += tau;
}

template class GlobalStepper<double>;
template class GlobalStepper<float>;

template <class Real>
void lpc1_step(FieldT<Real>& f, const StepConfig& cfg, std::unique_ptr<PdoApplier> op) {
  GlobalStepper<Real> s(f.grid, cfg, std::move(op));
  s.step(f);
}

template void lpc1_step<double>(FieldT<double>&, const StepConfig&, std::unique_ptr<PdoApplier>);
template void lpc1_step<float>(FieldT<float>&, const StepConfig&, std::unique_ptr<PdoApplier>);

WignerField exact_harmonic_solution(const std::function<double(double, double)>& f0, double t, double omega,
                                    const PhaseSpaceGrid& grid) {
  if (grid.dim != 1) throw std::invalid_argument("exact_harmonic_solution: requires dim = 1");
  if (!(omega > 0.0)) throw std::invalid_argument("exact_harmonic_solution: omega must be positive");
  WignerField f(grid, t);
  const double w = std::sqrt(omega);
  const double c = std::cos(w * t), s = std::sin(w * t);
  const std::size_t K = grid.k_size();
  for (int i = 0; i <= grid.Nx; ++i) {
    const double x = grid.x(i);
    double* out = f.slice(static_cast<std::size_t>(i));
    for (std::size_t j = 0; j < K; ++j) {
      const double k = grid.k(static_cast<int>(j));
      out[j] = f0(c * x - s * k / w, w * s * x + c * k);
    }
  }
  return f;
}

}  // namespace chasm
