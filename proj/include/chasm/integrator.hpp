#pragma once

#include <array>
#include <functional>
#include <memory>
#include <vector>

#include "chasm/bspline.hpp"
#include "chasm/phase_space.hpp"
#include "chasm/tkm.hpp"

namespace chasm {

enum class PotentialKind { Free, Harmonic, Coulomb };

/// V(x) = -strength / |x - center|.
struct CoulombCenter {
  std::array<double, 3> x{0.0, 0.0, 0.0};
  double strength = 1.0;
};

struct StepConfig {
  double tau = 0.0;
  PotentialKind potential = PotentialKind::Free;
  double omega = 0.0;
  std::vector<CoulombCenter> centers;
  int n_nb = 20;
  BoundaryCondition bc;
};

/// Rejects steps whose shift |k| tau / h reaches one cell for some grid k.
void validate_step_config(const StepConfig& cfg, const PhaseSpaceGrid& grid);

/// Theta_V evaluated one spatial point at a time. Implementations hold
/// private scratch, so each worker owns its own instance.
class PdoApplier {
 public:
  virtual ~PdoApplier() = default;
  /// out[0..K) = Theta at position x (dim entries) for one k-slice.
  virtual void apply_point(const double* slice, const double* x, double* out) = 0;
  virtual bool is_zero() const { return false; }
};

class ZeroPdo final : public PdoApplier {
 public:
  explicit ZeroPdo(std::size_t k_size) : K_(k_size) {}
  void apply_point(const double*, const double*, double* out) override;
  bool is_zero() const override { return true; }

 private:
  std::size_t K_;
};

class HarmonicPdoApplier final : public PdoApplier {
 public:
  HarmonicPdoApplier(const PhaseSpaceGrid& g, double omega) : op_(g.Nk, g.Lk), omega_(omega) {}
  void apply_point(const double* slice, const double* x, double* out) override { op_.apply(slice, x[0], omega_, out); }

 private:
  HarmonicPdo op_;
  double omega_;
};

class CoulombPdoApplier final : public PdoApplier {
 public:
  CoulombPdoApplier(const ConvolutionTensor& t, std::vector<CoulombCenter> centers)
      : ws_(t), centers_(std::move(centers)), Lk_(t.Lk) {}
  void apply_point(const double* slice, const double* x, double* out) override;
  PdoWorkspace& workspace() { return ws_; }

 private:
  PdoWorkspace ws_;
  std::vector<CoulombCenter> centers_;
  double Lk_;
};

using PdoFactory = std::function<std::unique_ptr<PdoApplier>()>;

/// Factory matching cfg.potential. The tensor must outlive every applier.
PdoFactory make_pdo_factory(const PhaseSpaceGrid& g, const StepConfig& cfg, const ConvolutionTensor* tensor);

/// Theta over every spatial point of f.
template <class Real>
void apply_pdo(const FieldT<Real>& f, PdoApplier& op, std::vector<double>& theta);

/// Per-column tap weights (5 x K) for a shift along spatial axis `axis`,
/// alpha(q) = k_axis(q) * tau / h.
std::vector<double> axis_tap_weights(const PhaseSpaceGrid& g, int axis, double tau);

/// Spline shift of a block of lines: samples is (N+1) x ncols, top/bottom
/// are the boundary-row right-hand sides per column, eta is (N+3) x ncols
/// scratch, out is (N+1) x ncols.
void shift_block(const SplineSolver& solver, const double* samples, const double* top, const double* bottom,
                 std::size_t ncols, const double* weights, double* eta, double* rhs_scratch, double* out);

/// f(x - k tau, k) on a single patch with the global spline, one axis at a
/// time (tensor-product interpolation in factorised form). All fields are
/// shifted in one pass with shared weights.
class GlobalAdvector {
 public:
  GlobalAdvector(const PhaseSpaceGrid& g, double tau, const BoundaryCondition& bc);
  /// Shifts every field in `fields` and `extra` (double-precision
  /// companions such as Theta) in a single sweep per axis.
  template <class Real>
  void advect(const std::vector<Real*>& fields, const std::vector<double*>& extra = {});

 private:
  PhaseSpaceGrid g_;
  BoundaryCondition bc_;
  SplineSolver solver_;
  std::array<std::vector<double>, 3> weights_;
};

template <class Real>
void advect(FieldT<Real>& f, double tau, const BoundaryCondition& bc = {});

/// Same operator as advect for dim = 3, evaluated as the explicit 4x4x4
/// stencil over the full tensor-product coefficient array.
void advect_tensor_stencil(WignerField& f, double tau, const BoundaryCondition& bc = {});

/// Single-patch LPC1 stepper holding Theta and the predictor.
template <class Real>
class GlobalStepper {
 public:
  GlobalStepper(const PhaseSpaceGrid& g, const StepConfig& cfg, std::unique_ptr<PdoApplier> op);
  void step(FieldT<Real>& f);

 private:
  PhaseSpaceGrid g_;
  StepConfig cfg_;
  std::unique_ptr<PdoApplier> op_;
  GlobalAdvector adv_;
  std::vector<double> theta_;
  std::vector<Real> pred_;
  std::vector<double> tmp_in_, tmp_out_;
};

/// One LPC1 step of f with a freshly built single-patch stepper.
template <class Real>
void lpc1_step(FieldT<Real>& f, const StepConfig& cfg, std::unique_ptr<PdoApplier> op);

/// f(x, k, t) = f0(x(t), k(t)) along the reversed harmonic flow; dim = 1.
WignerField exact_harmonic_solution(const std::function<double(double, double)>& f0, double t, double omega,
                                    const PhaseSpaceGrid& grid);

}  // namespace chasm
