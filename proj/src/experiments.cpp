#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>

#include "chasm/harness.hpp"

namespace chasm {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double v) {
  std::ostringstream o;
  o.precision(17);
  o << v;
  return o.str();
}

constexpr double kProtonOffset = 0.614161;

}  // namespace

std::vector<TkmRow> run_tkm_table(const std::vector<int>& nks, double Lk, double alpha) {
  std::vector<TkmRow> rows;
  for (int Nk : nks) {
    const auto t0 = Clock::now();
    const ConvolutionTensor t = build_convolution_tensor(Nk, Lk);
    const std::size_t n = static_cast<std::size_t>(Nk);
    const double dk = 2.0 * Lk / Nk;
    std::vector<cplx> fs(n * n * n);
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = 0; b < n; ++b)
        for (std::size_t c = 0; c < n; ++c) {
          const double k0 = -Lk + a * dk, k1 = -Lk + b * dk, k2 = -Lk + c * dk;
          fs[(a * n + b) * n + c] = std::exp(-alpha * alpha * (k0 * k0 + k1 * k1 + k2 * k2));
        }
    const std::vector<cplx> out = convolve_truncated(t, fs);
    TkmRow row;
    row.Nk = Nk;
    row.seconds = seconds_since(t0);
    double sq = 0.0;
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = 0; b < n; ++b)
        for (std::size_t c = 0; c < n; ++c) {
          const std::array<double, 3> k{-Lk + a * dk, -Lk + b * dk, -Lk + c * dk};
          const double ref = gaussian_convolution_reference(k, alpha, {0.0, 0.0, 0.0});
          const double d = std::abs(out[(a * n + b) * n + c] - cplx(ref, 0.0));
          row.l_inf = std::max(row.l_inf, d);
          sq += d * d;
        }
    row.l_2 = std::sqrt(sq * dk * dk * dk);
    rows.push_back(row);
  }
  return rows;
}

std::vector<TkmRow> run_tkm_table(const ExperimentConfig& cfg) { return run_tkm_table(cfg.tkm_nk, cfg.Lk, cfg.alpha); }

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("loglog_slope: need >= 2 paired points");
  const std::size_t n = x.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw std::invalid_argument("loglog_slope: values must be positive");
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  if (sxx == 0.0) throw std::invalid_argument("loglog_slope: x values must differ");
  return sxy / sxx;
}

ConvergenceStudy run_convergence_study(const ExperimentConfig& cfg, StudyParameter parameter,
                                       const std::vector<double>& values) {
  if (values.size() < 3) throw std::invalid_argument("convergence study: need at least three values");
  ConvergenceStudy s;
  s.parameter = parameter;
  s.values = values;
  if (parameter == StudyParameter::Nk) {
    std::vector<int> nks;
    for (double v : values) nks.push_back(static_cast<int>(std::lround(v)));
    for (const TkmRow& r : run_tkm_table(nks, cfg.Lk, cfg.alpha)) s.errors.push_back(r.l_inf);
  } else {
    if (cfg.experiment != ExperimentKind::Harmonic2D)
      throw std::invalid_argument("convergence study: dx and n_nb studies use the harmonic experiment");
    for (double v : values) {
      ExperimentConfig c = cfg;
      if (parameter == StudyParameter::Dx) {
        c.Nx = static_cast<int>(std::lround((c.x_max - c.x_min) / v));
        if (std::abs(c.Nx * v - (c.x_max - c.x_min)) > 1e-9 * (c.x_max - c.x_min))
          throw std::invalid_argument("convergence study: dx must divide the x extent");
      } else {
        c.n_nb = static_cast<int>(std::lround(v));
      }
      validate_config(c);
      auto run = prepare_run(c);
      run->sim.report_every = 0;
      const SimulationResult r = run_simulation(run->sim, run->f0);
      s.errors.push_back(r.series.back().eps_inf);
    }
  }
  s.slope = loglog_slope(s.values, s.errors);
  return s;
}

void write_convergence(const std::string& path, const ConvergenceStudy& s) {
  std::ofstream o(path);
  if (!o) throw std::runtime_error("cannot write " + path);
  o.precision(17);
  const char* name = s.parameter == StudyParameter::Dx ? "dx" : (s.parameter == StudyParameter::Nk ? "Nk" : "n_nb");
  o << name << ",l_inf\n";
  for (std::size_t i = 0; i < s.values.size(); ++i) o << s.values[i] << ',' << s.errors[i] << '\n';
  o << "# slope=" << s.slope << '\n';
}

void write_tkm_table(const std::string& path, const std::vector<TkmRow>& rows) {
  std::ofstream o(path);
  if (!o) throw std::runtime_error("cannot write " + path);
  o.precision(17);
  o << "Nk,l_inf,l_2,seconds\n";
  for (const TkmRow& r : rows) o << r.Nk << ',' << r.l_inf << ',' << r.l_2 << ',' << r.seconds << '\n';
}

std::unique_ptr<PreparedRun> prepare_run(const ExperimentConfig& cfg) {
  if (cfg.experiment == ExperimentKind::TkmGaussianTable)
    throw std::invalid_argument("prepare_run: tkm_table is not a simulation experiment");
  validate_config(cfg);
  auto run = std::make_unique<PreparedRun>();
  run->grid = build_grid(cfg.dim, cfg.x_min, cfg.x_max, cfg.Nx, cfg.Lk, cfg.Nk);
  const PhaseSpaceGrid& g = run->grid;
  StepConfig step;
  step.tau = cfg.tau;
  step.n_nb = cfg.n_nb;
  step.bc = cfg.bc;
  SimulationConfig& sim = run->sim;

  switch (cfg.experiment) {
    case ExperimentKind::Harmonic2D: {
      step.potential = PotentialKind::Harmonic;
      step.omega = cfg.omega;
      run->f0 = init_gaussian(g, {1.0}, {0.0}, 0.5, 2.0);
      const double omega = cfg.omega;
      sim.reference = [g, omega](double t) {
        const auto f0 = [](double x, double k) {
          return std::exp(-0.5 * (x - 1.0) * (x - 1.0) - 2.0 * k * k) / std::numbers::pi;
        };
        return exact_harmonic_solution(f0, t, omega, g);
      };
      break;
    }
    case ExperimentKind::Hydrogen1s:
      step.potential = PotentialKind::Coulomb;
      step.centers = {CoulombCenter{{0.0, 0.0, 0.0}, 1.0}};
      run->f0 = init_hydrogen_1s(g, cfg.Ny);
      break;
    case ExperimentKind::OneProton:
      step.potential = PotentialKind::Coulomb;
      step.centers = {CoulombCenter{{0.0, 0.0, 0.0}, 1.0}};
      run->f0 = init_gaussian(g, {1.0, 0.0, 0.0}, {0.0, 0.0, 0.0}, 0.5, 2.0);
      break;
    case ExperimentKind::TwoProtons:
      step.potential = PotentialKind::Coulomb;
      step.centers = {CoulombCenter{{-kProtonOffset, 0.0, 0.0}, 1.0}, CoulombCenter{{kProtonOffset, 0.0, 0.0}, 1.0}};
      run->f0 = init_gaussian(g, {0.0, 0.0, 0.0}, {0.0, 0.0, 0.0}, 0.5, 2.0);
      break;
    case ExperimentKind::TkmGaussianTable:
      break;
  }

  if (step.potential == PotentialKind::Coulomb) {
    bool loaded = false;
    if (!cfg.tensor_cache.empty()) loaded = load_convolution_tensor(cfg.tensor_cache, g.Nk, g.Lk, run->tensor);
    if (!loaded) {
      run->tensor = build_convolution_tensor(g.Nk, g.Lk);
      if (!cfg.tensor_cache.empty()) save_convolution_tensor(cfg.tensor_cache, run->tensor);
    }
    sim.tensor = &run->tensor;
  }
  sim.grid = g;
  sim.step = step;
  sim.patches = cfg.p;
  sim.steps = cfg.steps();
  sim.precision = cfg.precision;
  sim.transport = cfg.transport;
  sim.report_every = cfg.report_every;
  return run;
}

void write_metrics(const std::string& path, const SimulationResult& r) {
  std::ofstream o(path);
  if (!o) throw std::runtime_error("cannot write " + path);
  o.precision(17);
  o << "step,time,eps_inf,eps_2,eps_mass,max_abs,mass\n";
  for (std::size_t i = 0; i < r.series.size(); ++i) {
    const ErrorReport& e = r.series[i];
    o << r.report_steps[i] << ',' << e.time << ',' << e.eps_inf << ',' << e.eps_2 << ',' << e.eps_mass << ','
      << r.max_abs_series[i] << ',' << r.mass_series[i] << '\n';
  }
}

void write_summary(const std::string& path, const ExperimentConfig& cfg, const SimulationResult& r,
                   double kernel_seconds, const std::map<std::string, std::string>& extra) {
  std::ofstream o(path);
  if (!o) throw std::runtime_error("cannot write " + path);
  for (const auto& [k, v] : cfg.echo()) o << "config." << k << '=' << v << '\n';
  if (!cfg.defaulted.empty()) {
    o << "WARNING.defaults_in_use=";
    for (std::size_t i = 0; i < cfg.defaulted.size(); ++i) o << (i ? "," : "") << cfg.defaulted[i];
    o << '\n';
  }
  o << "result.initial_mass=" << fmt(r.initial_mass) << '\n';
  if (!r.series.empty()) {
    const ErrorReport& e = r.series.back();
    o << "result.time=" << fmt(e.time) << '\n';
    o << "result.eps_inf=" << fmt(e.eps_inf) << '\n';
    o << "result.eps_2=" << fmt(e.eps_2) << '\n';
    o << "result.eps_mass=" << fmt(e.eps_mass) << '\n';
    o << "result.max_abs=" << fmt(r.max_abs_series.back()) << '\n';
    o << "result.mass=" << fmt(r.mass_series.back()) << '\n';
    o << "result.finite=" << (all_finite(r.final_field) ? "true" : "false") << '\n';
  }
  o << "counters.steps=" << r.counters.steps << '\n';
  o << "counters.messages=" << r.counters.transport.messages << '\n';
  o << "counters.bytes=" << r.counters.transport.bytes << '\n';
  o << "counters.wall_seconds=" << fmt(r.counters.wall) << '\n';
  o << "counters.kernel_seconds=" << fmt(kernel_seconds) << '\n';
  o << "counters.time_pdo=" << fmt(r.counters.times.pdo) << '\n';
  o << "counters.time_contrib=" << fmt(r.counters.times.contrib) << '\n';
  o << "counters.time_exchange=" << fmt(r.counters.times.exchange) << '\n';
  o << "counters.time_solve=" << fmt(r.counters.times.solve) << '\n';
  o << "counters.time_correction=" << fmt(r.counters.times.correction) << '\n';
  o << "counters.time_reduction=" << fmt(r.counters.times.reduction) << '\n';
  for (const auto& [k, v] : extra) o << k << '=' << v << '\n';
}

RunOutcome run_experiment(const ExperimentConfig& cfg) {
  std::filesystem::create_directories(cfg.out_dir);
  auto run = prepare_run(cfg);
  SimulationConfig& sim = run->sim;
  const int steps = sim.steps;
  if (cfg.dump_every > 0)
    sim.report_every = sim.report_every > 0 ? std::gcd(sim.report_every, cfg.dump_every) : cfg.dump_every;
  double io_seconds = 0.0;
  const std::filesystem::path dir(cfg.out_dir);
  sim.on_report = [&](const WignerField& f, int step) {
    const bool dump = step == steps || (cfg.dump_every > 0 && step % cfg.dump_every == 0);
    if (!dump) return;
    const auto t0 = Clock::now();
    std::ostringstream name;
    name << "dump_" << step << ".bin";
    if (cfg.precision == Precision::F32)
      write_field((dir / name.str()).string(), convert_field<float>(f));
    else
      write_field((dir / name.str()).string(), f);
    io_seconds += seconds_since(t0);
  };
  RunOutcome out;
  out.result = run_simulation(sim, run->f0);
  out.kernel_seconds = out.result.counters.wall - io_seconds - out.result.counters.times.reduction;
  out.summary_path = (dir / "summary.txt").string();
  out.metrics_path = (dir / "metrics.csv").string();
  std::map<std::string, std::string> extra;
  extra["transport.name"] = cfg.p > 1 ? (cfg.transport == TransportKind::Loopback ? "loopback" : "inprocess") : "null";
  extra["patches.total"] = std::to_string(static_cast<long long>(std::pow(cfg.p, cfg.dim)));
  write_summary(out.summary_path, cfg, out.result, out.kernel_seconds, extra);
  write_metrics(out.metrics_path, out.result);
  return out;
}

DiffReport diff_dumps(const std::string& a, const std::string& b) {
  const WignerField fa = read_field(a);
  const WignerField fb = read_field(b);
  if (!(fa.grid == fb.grid)) throw std::invalid_argument("diff: dumps are on different grids");
  DiffReport d;
  double sq = 0.0;
  for (std::size_t i = 0; i < fa.values.size(); ++i) {
    const double e = fa.values[i] - fb.values[i];
    d.max_abs_diff = std::max(d.max_abs_diff, std::abs(e));
    sq += e * e;
  }
  d.l2_diff = std::sqrt(sq * fa.grid.cell_volume());
  d.mass_a = quadrature_mass(fa);
  d.mass_b = quadrature_mass(fb);
  return d;
}

}  // namespace chasm
