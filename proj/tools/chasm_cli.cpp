#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "chasm/harness.hpp"

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kValidation = 2, kNumerical = 3, kIo = 4 };

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::istringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) out.push_back(std::stod(item));
  return out;
}

void apply_overrides(chasm::ExperimentConfig& cfg, const std::string& out, int patches, const std::string& precision) {
  if (!out.empty()) cfg.out_dir = out;
  if (patches > 0) cfg.p = patches;
  if (precision == "f32") cfg.precision = chasm::Precision::F32;
  if (precision == "f64") cfg.precision = chasm::Precision::F64;
  chasm::validate_config(cfg);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"chasm: phase-space Wigner solver"};
  app.require_subcommand(1);

  std::string config_path, out_dir, precision, param, values, dump_a, dump_b;
  int patches = 0;

  auto* run = app.add_subcommand("run", "Run a simulation experiment");
  run->add_option("--config", config_path, "Config file")->required();
  run->add_option("--out", out_dir, "Output directory");
  run->add_option("--patches", patches, "Patches per axis")->check(CLI::PositiveNumber);
  run->add_option("--precision", precision, "Field precision")->check(CLI::IsMember({"f32", "f64"}));

  auto* tkm = app.add_subcommand("tkm-table", "Truncated-kernel convolution error table");
  tkm->add_option("--config", config_path, "Config file (experiment=tkm_table)");
  tkm->add_option("--out", out_dir, "Output directory");

  auto* conv = app.add_subcommand("convergence", "Observed-order study");
  conv->add_option("--config", config_path, "Config file")->required();
  conv->add_option("--out", out_dir, "Output directory");
  conv->add_option("--param", param, "Parameter to vary")->required()->check(CLI::IsMember({"dx", "nk", "n_nb"}));
  conv->add_option("--values", values, "Comma-separated values (at least three)")->required();
  conv->add_option("--patches", patches, "Patches per axis")->check(CLI::PositiveNumber);
  conv->add_option("--precision", precision, "Field precision")->check(CLI::IsMember({"f32", "f64"}));

  auto* diff = app.add_subcommand("diff", "Compare two field dumps");
  diff->add_option("a", dump_a, "First dump")->required();
  diff->add_option("b", dump_b, "Second dump")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  }

  try {
    if (run->parsed()) {
      chasm::ExperimentConfig cfg = chasm::load_config(config_path);
      if (cfg.experiment == chasm::ExperimentKind::TkmGaussianTable)
        throw chasm::ConfigError(0, "experiment tkm_table runs with the tkm-table subcommand");
      apply_overrides(cfg, out_dir, patches, precision);
      const chasm::RunOutcome r = chasm::run_experiment(cfg);
      const chasm::ErrorReport& e = r.result.series.back();
      std::printf("t=%.6g eps_inf=%.6e eps_2=%.6e eps_mass=%.6e\n", e.time, e.eps_inf, e.eps_2, e.eps_mass);
      std::printf("summary: %s\nmetrics: %s\n", r.summary_path.c_str(), r.metrics_path.c_str());
      if (!chasm::all_finite(r.result.final_field)) {
        std::fprintf(stderr, "numerical failure: non-finite values in the final field\n");
        return kNumerical;
      }
    } else if (tkm->parsed()) {
      chasm::ExperimentConfig cfg =
          config_path.empty() ? chasm::parse_config("experiment=tkm_table\n") : chasm::load_config(config_path);
      if (!out_dir.empty()) cfg.out_dir = out_dir;
      const auto rows = chasm::run_tkm_table(cfg);
      std::filesystem::create_directories(cfg.out_dir);
      const std::string path = (std::filesystem::path(cfg.out_dir) / "tkm_table.csv").string();
      chasm::write_tkm_table(path, rows);
      std::printf("%6s %14s %14s %10s\n", "Nk", "l_inf", "l_2", "seconds");
      for (const auto& r : rows) std::printf("%6d %14.4e %14.4e %10.3f\n", r.Nk, r.l_inf, r.l_2, r.seconds);
      std::printf("table: %s\n", path.c_str());
    } else if (conv->parsed()) {
      chasm::ExperimentConfig cfg = chasm::load_config(config_path);
      apply_overrides(cfg, out_dir, patches, precision);
      const chasm::StudyParameter p = param == "dx" ? chasm::StudyParameter::Dx
                                      : param == "nk" ? chasm::StudyParameter::Nk
                                                      : chasm::StudyParameter::NNb;
      const chasm::ConvergenceStudy s = chasm::run_convergence_study(cfg, p, parse_list(values));
      std::filesystem::create_directories(cfg.out_dir);
      const std::string path = (std::filesystem::path(cfg.out_dir) / ("convergence_" + param + ".csv")).string();
      chasm::write_convergence(path, s);
      for (std::size_t i = 0; i < s.values.size(); ++i) std::printf("%-10g %.6e\n", s.values[i], s.errors[i]);
      std::printf("slope=%.4f\nseries: %s\n", s.slope, path.c_str());
    } else if (diff->parsed()) {
      const chasm::DiffReport d = chasm::diff_dumps(dump_a, dump_b);
      std::printf("max_abs_diff=%.17g\nl2_diff=%.17g\nmass_a=%.17g\nmass_b=%.17g\n", d.max_abs_diff, d.l2_diff,
                  d.mass_a, d.mass_b);
    }
  } catch (const chasm::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kValidation;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "validation error: %s\n", e.what());
    return kValidation;
  } catch (const std::ios_base::failure& e) {
    std::fprintf(stderr, "io error: %s\n", e.what());
    return kIo;
  } catch (const std::filesystem::filesystem_error& e) {
    std::fprintf(stderr, "io error: %s\n", e.what());
    return kIo;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "numerical error: %s\n", e.what());
    return kNumerical;
  }
  return kOk;
}
