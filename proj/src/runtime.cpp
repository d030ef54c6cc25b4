#include <barrier>
#include <chrono>
#include <cmath>
#include <cstring>
#include <exception>
#include <stdexcept>

#include "chasm/runtime.hpp"

namespace chasm {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

// Patch-local LPC1 stepper. With p = 1 the spline along every axis is the
// global solve; otherwise each axis sweep runs PMBC exchange, local Hermite
// solve, provisional shift and the shared-node correction exchange.
template <class Real>
class PatchWorker {
 public:
  PatchWorker(const PatchLayout& lay, const PhaseSpaceGrid& g, const StepConfig& cfg, const PmbcTable* table,
              Transport& tr, std::unique_ptr<PdoApplier> op)
      : lay_(lay), g_(g), cfg_(cfg), table_(table), tr_(tr), op_(std::move(op)) {
    n_ = lay.nodes_per_axis();
    K_ = g.k_size();
    S_ = lay.spatial_size();
    f_.assign(S_ * K_, Real(0));
    if (lay.p == 1) {
      global_ = std::make_unique<GlobalAdvector>(g, cfg.tau, cfg.bc);
    } else {
      for (int a = 0; a < g.dim; ++a) {
        weights_[a] = axis_tap_weights(g, a, cfg.tau);
        nonneg_[a].resize(K_);
        for (std::size_t q = 0; q < K_; ++q) nonneg_[a][q] = k_axis(a, q) * cfg.tau >= 0.0 ? 1 : 0;
      }
    }
  }

  std::vector<Real>& field() { return f_; }
  const PhaseTimes& times() const { return times_; }

  void load(const WignerField& global) {
    for_each_local([&](std::size_t loc, std::size_t glob) {
      const double* s = global.values.data() + glob * K_;
      Real* d = f_.data() + loc * K_;
      for (std::size_t q = 0; q < K_; ++q) d[q] = static_cast<Real>(s[q]);
    });
  }

  // Writes the nodes this patch owns exclusively (the right interface node
  // belongs to the right neighbour).
  void store_owned(FieldT<Real>& global) const {
    for_each_local([&](std::size_t loc, std::size_t glob) {
      std::memcpy(global.values.data() + glob * K_, f_.data() + loc * K_, K_ * sizeof(Real));
    }, true);
  }

  void step() {
    const double tau = cfg_.tau;
    if (op_->is_zero()) {
      advect({f_.data()}, {});
      return;
    }
    auto t0 = Clock::now();
    apply_all(f_.data(), theta_);
    times_.pdo += seconds_since(t0);
    advect({f_.data()}, {theta_.data()});
    pred_.resize(f_.size());
    for (std::size_t i = 0; i < f_.size(); ++i) {
      const double af = static_cast<double>(f_[i]);
      pred_[i] = static_cast<Real>(af + tau * theta_[i]);
      f_[i] = static_cast<Real>(af + 0.5 * tau * theta_[i]);
    }
    t0 = Clock::now();
    in_.resize(K_);
    out_.resize(K_);
    double x[3] = {0.0, 0.0, 0.0};
    for (std::size_t sp = 0; sp < S_; ++sp) {
      for (std::size_t q = 0; q < K_; ++q) in_[q] = static_cast<double>(pred_[sp * K_ + q]);
      position(sp, x);
      op_->apply_point(in_.data(), x, out_.data());
      Real* dst = f_.data() + sp * K_;
      for (std::size_t q = 0; q < K_; ++q) dst[q] = static_cast<Real>(static_cast<double>(dst[q]) + 0.5 * tau * out_[q]);
    }
    times_.pdo += seconds_since(t0);
  }

 private:
  double k_axis(int a, std::size_t q) const {
    std::size_t stride = 1;
    for (int b = a + 1; b < g_.dim; ++b) stride *= static_cast<std::size_t>(g_.Nk);
    return g_.k(static_cast<int>((q / stride) % static_cast<std::size_t>(g_.Nk)));
  }

  void position(std::size_t sp, double* x) const {
    for (int a = g_.dim - 1; a >= 0; --a) {
      x[a] = g_.x(lay_.lo[a] + static_cast<int>(sp % n_));
      sp /= n_;
    }
  }

  template <class F>
  void for_each_local(F&& fn, bool owned_only = false) const {
    const std::size_t N = g_.nx_points();
    for (std::size_t sp = 0; sp < S_; ++sp) {
      std::size_t r = sp, glob = 0, mul = 1;
      bool keep = true;
      for (int a = g_.dim - 1; a >= 0; --a) {
        const std::size_t i = r % n_;
        r /= n_;
        if (owned_only && i == n_ - 1 && lay_.neighbor[a][1] >= 0) keep = false;
        glob += (static_cast<std::size_t>(lay_.lo[a]) + i) * mul;
        mul *= N;
      }
      if (keep) fn(sp, glob);
    }
  }

  void apply_all(const Real* f, std::vector<double>& theta) {
    theta.resize(S_ * K_);
    in_.resize(K_);
    double x[3] = {0.0, 0.0, 0.0};
    for (std::size_t sp = 0; sp < S_; ++sp) {
      for (std::size_t q = 0; q < K_; ++q) in_[q] = static_cast<double>(f[sp * K_ + q]);
      position(sp, x);
      op_->apply_point(in_.data(), x, theta.data() + sp * K_);
    }
  }

  template <class T>
  void gather(const T* field, std::size_t base, std::size_t stride, double* dst) const {
    for (std::size_t r = 0; r < n_; ++r) {
      const T* s = field + (base + r * stride) * K_;
      double* d = dst + r * K_;
      for (std::size_t q = 0; q < K_; ++q) d[q] = static_cast<double>(s[q]);
    }
  }

  template <class T>
  void scatter(T* field, std::size_t base, std::size_t stride, const double* src) const {
    for (std::size_t r = 0; r < n_; ++r) {
      T* d = field + (base + r * stride) * K_;
      const double* s = src + r * K_;
      for (std::size_t q = 0; q < K_; ++q) d[q] = static_cast<T>(s[q]);
    }
  }

  void advect(const std::vector<Real*>& fields, const std::vector<double*>& extra) {
    if (global_) {
      const auto t0 = Clock::now();
      global_->advect<Real>(fields, extra);
      times_.solve += seconds_since(t0);
      return;
    }
    for (int a = 0; a < g_.dim; ++a) sweep(a, fields, extra);
  }

  // Calls fn(field, line, base, stride) for every line of every field along axis a.
  template <class F>
  void for_each_line(int a, std::size_t nf, F&& fn) const {
    std::size_t stride = 1;
    for (int b = a + 1; b < g_.dim; ++b) stride *= n_;
    std::size_t outer = 1;
    for (int b = 0; b < a; ++b) outer *= n_;
    for (std::size_t fi = 0; fi < nf; ++fi) {
      std::size_t line = 0;
      for (std::size_t o = 0; o < outer; ++o)
        for (std::size_t i = 0; i < stride; ++i, ++line) fn(fi, line, o * n_ * stride + i, stride);
    }
  }

  void sweep(int a, const std::vector<Real*>& fields, const std::vector<double*>& extra) {
    const PmbcTable& t = *table_;
    const std::size_t nf = fields.size() + extra.size();
    const std::size_t lines = S_ / n_;
    const std::size_t plane = nf * lines * K_;
    const int q = lay_.index[a];
    const bool left_edge = lay_.neighbor[a][0] < 0, right_edge = lay_.neighbor[a][1] < 0;
    const bool natural = cfg_.bc.kind == BcKind::Natural;
    line_.resize(n_ * K_);

    auto gather_any = [&](std::size_t fi, std::size_t base, std::size_t stride) {
      if (fi < fields.size())
        gather(fields[fi], base, stride, line_.data());
      else
        gather(extra[fi - fields.size()], base, stride, line_.data());
    };

    auto t0 = Clock::now();
    xi_L_.assign(left_edge ? 0 : plane, 0.0);
    xi_R_.assign(right_edge ? 0 : plane, 0.0);
    edge_L_.assign(left_edge ? plane : 0, natural ? 0.0 : cfg_.bc.phi_L);
    edge_R_.assign(right_edge ? plane : 0, natural ? 0.0 : cfg_.bc.phi_R);
    for_each_line(a, nf, [&](std::size_t fi, std::size_t line, std::size_t base, std::size_t stride) {
      const std::size_t off = (fi * lines + line) * K_;
      gather_any(fi, base, stride);
      if (!left_edge) pmbc_contrib_columns(line_.data(), K_, t, Side::L, q, xi_L_.data() + off);
      if (!right_edge) pmbc_contrib_columns(line_.data(), K_, t, Side::R, q, xi_R_.data() + off);
      if (natural && left_edge) pmbc_edge_columns(line_.data(), K_, t, Side::L, edge_L_.data() + off);
      if (natural && right_edge) pmbc_edge_columns(line_.data(), K_, t, Side::R, edge_R_.data() + off);
    });
    times_.contrib += seconds_since(t0);

    t0 = Clock::now();
    post_pmbc(tr_, lay_, a, xi_L_, xi_R_);
    const InterfaceValues phi = collect_pmbc(tr_, lay_, a, xi_L_, xi_R_, edge_L_, edge_R_);
    times_.exchange += seconds_since(t0);

    t0 = Clock::now();
    eta_.resize((n_ + 2) * K_);
    rhs_.resize((n_ + 2) * K_);
    out_line_.resize(n_ * K_);
    planes_.first.resize(plane);
    planes_.last.resize(plane);
    const double* w = weights_[a].data();
    for_each_line(a, nf, [&](std::size_t fi, std::size_t line, std::size_t base, std::size_t stride) {
      const std::size_t off = (fi * lines + line) * K_;
      gather_any(fi, base, stride);
      shift_block(t.local, line_.data(), phi.phi_L.data() + off, phi.phi_R.data() + off, K_, w, eta_.data(),
                  rhs_.data(), out_line_.data());
      std::memcpy(planes_.first.data() + off, out_line_.data(), K_ * sizeof(double));
      std::memcpy(planes_.last.data() + off, out_line_.data() + (n_ - 1) * K_, K_ * sizeof(double));
      if (fi < fields.size())
        scatter(fields[fi], base, stride, out_line_.data());
      else
        scatter(extra[fi - fields.size()], base, stride, out_line_.data());
    });
    times_.solve += seconds_since(t0);

    t0 = Clock::now();
    post_corrections(tr_, lay_, a, planes_, nonneg_[a], K_);
    collect_corrections(tr_, lay_, a, planes_, nonneg_[a], K_);
    for_each_line(a, nf, [&](std::size_t fi, std::size_t line, std::size_t base, std::size_t stride) {
      const std::size_t off = (fi * lines + line) * K_;
      const std::size_t r0 = base * K_, r1 = (base + (n_ - 1) * stride) * K_;
      for (std::size_t k = 0; k < K_; ++k) {
        if (fi < fields.size()) {
          fields[fi][r0 + k] = static_cast<Real>(planes_.first[off + k]);
          fields[fi][r1 + k] = static_cast<Real>(planes_.last[off + k]);
        } else {
          extra[fi - fields.size()][r0 + k] = planes_.first[off + k];
          extra[fi - fields.size()][r1 + k] = planes_.last[off + k];
        }
      }
    });
    times_.correction += seconds_since(t0);
  }

  PatchLayout lay_;
  PhaseSpaceGrid g_;
  StepConfig cfg_;
  const PmbcTable* table_;
  Transport& tr_;
  std::unique_ptr<PdoApplier> op_;
  std::unique_ptr<GlobalAdvector> global_;
  std::size_t n_ = 0, K_ = 0, S_ = 0;
  std::array<std::vector<double>, 3> weights_;
  std::array<std::vector<std::uint8_t>, 3> nonneg_;
  std::vector<Real> f_, pred_;
  std::vector<double> theta_, in_, out_;
  std::vector<double> line_, eta_, rhs_, out_line_;
  std::vector<double> xi_L_, xi_R_, edge_L_, edge_R_;
  SharedPlanes planes_;
  PhaseTimes times_;
};

template <class Real>
SimulationResult run_typed(const SimulationConfig& cfg, const WignerField& f0) {
  const PhaseSpaceGrid& g = cfg.grid;
  if (!(f0.grid == g)) throw std::invalid_argument("run_simulation: initial field grid mismatch");
  if (cfg.steps < 0) throw std::invalid_argument("run_simulation: steps must be >= 0");
  validate_step_config(cfg.step, g);
  const std::vector<PatchLayout> layouts = decompose(g, cfg.patches);
  const int p = cfg.patches;
  PmbcTable table;
  if (p > 1) table = build_pmbc_table(g.Nx, p, cfg.step.n_nb, g.h, cfg.step.bc.kind);
  std::unique_ptr<Transport> tr = make_transport(cfg.transport, static_cast<int>(layouts.size()));
  const PdoFactory factory = make_pdo_factory(g, cfg.step, cfg.tensor);

  std::vector<std::unique_ptr<PatchWorker<Real>>> workers;
  for (const PatchLayout& lay : layouts) {
    workers.push_back(std::make_unique<PatchWorker<Real>>(lay, g, cfg.step, p > 1 ? &table : nullptr, *tr, factory()));
    workers.back()->load(f0);
  }

  SimulationResult res;
  res.initial_mass = std::isnan(cfg.initial_mass) ? quadrature_mass(f0) : cfg.initial_mass;
  FieldT<Real> gathered(g, f0.time);
  std::exception_ptr report_error;
  int current_step = 0;
  double reduction_time = 0.0;

  auto report = [&]() noexcept {
    try {
      const auto t0 = Clock::now();
      gathered.time = f0.time + current_step * cfg.step.tau;
      const WignerField ref = cfg.reference ? cfg.reference(gathered.time) : f0;
      ErrorReport r = error_metrics(gathered, ref, res.initial_mass);
      res.series.push_back(r);
      res.report_steps.push_back(current_step);
      res.max_abs_series.push_back(max_abs(gathered));
      res.mass_series.push_back(quadrature_mass(gathered));
      reduction_time += seconds_since(t0);
      if (cfg.on_report) cfg.on_report(convert_field<double>(gathered), current_step);
    } catch (...) {
      if (!report_error) report_error = std::current_exception();
    }
  };
  auto is_report_step = [&](int s) {
    return s == cfg.steps || (cfg.report_every > 0 && s % cfg.report_every == 0);
  };

  const auto wall0 = Clock::now();
  const int nw = static_cast<int>(workers.size());
  std::barrier sync(nw, [&]() noexcept {
    report();
  });
  std::vector<std::exception_ptr> errors(workers.size());
  std::atomic<bool> failed{false};

  auto body = [&](int id) {
    PatchWorker<Real>& w = *workers[static_cast<std::size_t>(id)];
    try {
      if (cfg.report_every > 0 || cfg.steps == 0) {
        w.store_owned(gathered);
        sync.arrive_and_wait();
      }
      for (int s = 1; s <= cfg.steps; ++s) {
        if (failed) throw std::runtime_error("run aborted by another worker");
        w.step();
        if (is_report_step(s)) {
          w.store_owned(gathered);
          if (id == 0) current_step = s;
          sync.arrive_and_wait();
        }
      }
    } catch (...) {
      errors[static_cast<std::size_t>(id)] = std::current_exception();
      failed = true;
      tr->abort();
      sync.arrive_and_drop();
    }
  };
  // current_step is written by worker 0 before it arrives; the completion
  // step runs after every arrival, so the write is visible to it.
  if (nw == 1) {
    body(0);
  } else {
    std::vector<std::thread> threads;
    for (int id = 0; id < nw; ++id) threads.emplace_back(body, id);
    for (std::thread& t : threads) t.join();
  }
  res.counters.wall = seconds_since(wall0);
  for (const std::exception_ptr& e : errors)
    if (e) std::rethrow_exception(e);
  if (report_error) std::rethrow_exception(report_error);

  res.final_field = convert_field<double>(gathered);
  res.final_field.time = f0.time + cfg.steps * cfg.step.tau;
  res.counters.transport = tr->counters();
  res.counters.steps = cfg.steps;
  for (const auto& w : workers) {
    const PhaseTimes& t = w->times();
    res.counters.times.pdo += t.pdo;
    res.counters.times.contrib += t.contrib;
    res.counters.times.exchange += t.exchange;
    res.counters.times.solve += t.solve;
    res.counters.times.correction += t.correction;
  }
  res.counters.times.reduction = reduction_time;
  return res;
}

}  // namespace

SimulationResult run_simulation(const SimulationConfig& cfg, const WignerField& f0) {
  if (cfg.precision == Precision::F32) return run_typed<float>(cfg, f0);
  return run_typed<double>(cfg, f0);
}

}  // namespace chasm
