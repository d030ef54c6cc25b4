#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "chasm/runtime.hpp"

namespace chasm {

enum class ExperimentKind { TkmGaussianTable, Harmonic2D, Hydrogen1s, OneProton, TwoProtons };

/// Invalid configuration text; line is 0 when the error is not tied to a line.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(int line, const std::string& msg)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + msg : msg), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::Harmonic2D;
  int dim = 1;
  double x_min = -12.0;
  double x_max = 12.0;
  int Nx = 240;
  double Lk = 6.4;
  int Nk = 512;
  double tau = 0.0;
  double T = 0.0;
  int n_nb = 20;
  int p = 1;
  BoundaryCondition bc;
  Precision precision = Precision::F64;
  TransportKind transport = TransportKind::InProcess;
  std::string out_dir = "out";
  int dump_every = 20;
  int report_every = 20;
  double omega = 0.0;
  int Ny = 128;
  double alpha = 1.0;  ///< Gaussian width of the TKM table input
  std::vector<int> tkm_nk{8, 16, 32, 64, 80, 128};
  std::string tensor_cache;  ///< empty: no cache file

  /// Keys that took their default value.
  std::vector<std::string> defaulted;

  int steps() const;
  /// key=value pairs of every setting, in a fixed order.
  std::vector<std::pair<std::string, std::string>> echo() const;
};

std::string experiment_name(ExperimentKind k);

/// Parses `key = value` lines ('#' starts a comment). Unknown or repeated
/// keys, malformed values and failed preconditions raise ConfigError.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

/// Re-checks every module precondition; parse_config calls this.
void validate_config(const ExperimentConfig& cfg);

struct TkmRow {
  int Nk = 0;
  double l_inf = 0.0;
  double l_2 = 0.0;
  double seconds = 0.0;
};

/// Errors of the truncated-kernel convolution of exp(-alpha^2 |k|^2) on
/// [-Lk, Lk)^3 against the closed form, one row per Nk.
std::vector<TkmRow> run_tkm_table(const std::vector<int>& nks, double Lk, double alpha);
std::vector<TkmRow> run_tkm_table(const ExperimentConfig& cfg);

enum class StudyParameter { Dx, Nk, NNb };

struct ConvergenceStudy {
  StudyParameter parameter = StudyParameter::Dx;
  std::vector<double> values;  ///< dx, Nk or n_nb
  std::vector<double> errors;  ///< l_inf error per value
  double slope = 0.0;          ///< least-squares slope of log(error) vs log(value)
};

/// Least-squares slope of log(y) against log(x).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

/// Dx and NNb run the harmonic experiment of cfg to time T at each value
/// and compare against the exact solution; Nk runs the TKM table.
ConvergenceStudy run_convergence_study(const ExperimentConfig& cfg, StudyParameter parameter,
                                       const std::vector<double>& values);

void write_convergence(const std::string& path, const ConvergenceStudy& s);
void write_tkm_table(const std::string& path, const std::vector<TkmRow>& rows);

/// Grid, step configuration and initial field of a simulation experiment.
struct PreparedRun {
  PhaseSpaceGrid grid;
  SimulationConfig sim;
  WignerField f0;
  ConvolutionTensor tensor;
};

/// Builds everything needed to run cfg. The returned object owns the
/// convolution tensor referenced by sim.tensor, so it must not be copied.
std::unique_ptr<PreparedRun> prepare_run(const ExperimentConfig& cfg);

struct RunOutcome {
  SimulationResult result;
  double kernel_seconds = 0.0;
  std::string summary_path;
  std::string metrics_path;
};

/// Runs a simulation experiment, writing summary.txt, metrics.csv and
/// field dumps (dump_<step>.bin) into cfg.out_dir.
RunOutcome run_experiment(const ExperimentConfig& cfg);

void write_summary(const std::string& path, const ExperimentConfig& cfg, const SimulationResult& r,
                   double kernel_seconds, const std::map<std::string, std::string>& extra = {});
void write_metrics(const std::string& path, const SimulationResult& r);

struct DiffReport {
  double max_abs_diff = 0.0;
  double l2_diff = 0.0;
  double mass_a = 0.0;
  double mass_b = 0.0;
};

/// Compares two field dumps on the same grid.
DiffReport diff_dumps(const std::string& a, const std::string& b);

}  // namespace chasm
