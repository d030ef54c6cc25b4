#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "chasm/harness.hpp"

namespace chasm {

std::string experiment_name(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::TkmGaussianTable: return "tkm_table";
    case ExperimentKind::Harmonic2D: return "harmonic2d";
    case ExperimentKind::Hydrogen1s: return "hydrogen1s";
    case ExperimentKind::OneProton: return "one_proton";
    case ExperimentKind::TwoProtons: return "two_protons";
  }
  return "unknown";
}

namespace {

using LineMap = std::map<std::string, int>;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string fmt(double v) {
  std::ostringstream o;
  o.precision(17);
  o << v;
  return o.str();
}

double to_double(const std::string& key, const std::string& v, int line) {
  double out = 0.0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size() || !std::isfinite(out))
    throw ConfigError(line, "key '" + key + "': expected a finite number, got '" + v + "'");
  return out;
}

int to_int(const std::string& key, const std::string& v, int line) {
  int out = 0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size())
    throw ConfigError(line, "key '" + key + "': expected an integer, got '" + v + "'");
  return out;
}

ExperimentKind to_experiment(const std::string& v, int line) {
  if (v == "tkm_table") return ExperimentKind::TkmGaussianTable;
  if (v == "harmonic2d") return ExperimentKind::Harmonic2D;
  if (v == "hydrogen1s") return ExperimentKind::Hydrogen1s;
  if (v == "one_proton") return ExperimentKind::OneProton;
  if (v == "two_protons") return ExperimentKind::TwoProtons;
  throw ConfigError(line, "key 'experiment': unknown experiment '" + v +
                              "' (expected tkm_table, harmonic2d, hydrogen1s, one_proton, two_protons)");
}

void apply_experiment_defaults(ExperimentConfig& c) {
  switch (c.experiment) {
    case ExperimentKind::TkmGaussianTable:
      c.dim = 3;
      c.Lk = 16.0;
      c.Nk = 64;
      c.Nx = 1;
      c.x_min = 0.0;
      c.x_max = 1.0;
      break;
    case ExperimentKind::Harmonic2D:
      c.dim = 1;
      c.x_min = -12.0;
      c.x_max = 12.0;
      c.Nx = 240;
      c.Lk = 6.4;
      c.Nk = 512;
      c.omega = (std::numbers::pi / 5.0) * (std::numbers::pi / 5.0);
      break;
    case ExperimentKind::Hydrogen1s:
    case ExperimentKind::OneProton:
    case ExperimentKind::TwoProtons:
      c.dim = 3;
      c.x_min = -9.0;
      c.x_max = 9.0;
      c.Nx = 20;
      c.Lk = 6.4;
      c.Nk = 16;
      break;
  }
}

const std::vector<std::string>& known_keys() {
  static const std::vector<std::string> keys{
      "experiment", "x_min", "x_max", "Nx", "Lk", "Nk", "tau", "T", "n_nb", "p", "bc", "phi_L", "phi_R",
      "precision", "transport", "out", "dump_every", "report_every", "omega", "Ny", "alpha", "tkm_nk",
      "tensor_cache"};
  return keys;
}

void check(const ExperimentConfig& c, const LineMap& lines) {
  auto fail = [&](const std::string& key, const std::string& msg) {
    const auto it = lines.find(key);
    throw ConfigError(it == lines.end() ? 0 : it->second, "key '" + key + "': " + msg);
  };
  if (c.Nk < 2 || c.Nk % 2 != 0) fail("Nk", "must be a positive even integer, got " + std::to_string(c.Nk));
  if (!(c.Lk > 0.0)) fail("Lk", "must be positive");
  if (c.experiment == ExperimentKind::TkmGaussianTable) {
    if (c.tkm_nk.empty()) fail("tkm_nk", "needs at least one entry");
    for (int n : c.tkm_nk)
      if (n < 2 || n % 2 != 0) fail("tkm_nk", "every entry must be a positive even integer");
    if (!(c.alpha > 0.0)) fail("alpha", "must be positive");
    return;
  }
  if (c.Nx < 2) fail("Nx", "must be >= 2");
  if (!(c.x_max > c.x_min)) fail("x_max", "must exceed x_min");
  if (!lines.count("tau")) fail("tau", "missing required key");
  if (!lines.count("T")) fail("T", "missing required key");
  if (!(c.tau > 0.0)) fail("tau", "must be positive");
  if (!(c.T >= 0.0)) fail("T", "must be non-negative");
  const double steps = c.T / c.tau;
  if (std::abs(steps - std::round(steps)) > 1e-6 * std::max(1.0, steps))
    fail("T", "must be an integer multiple of tau");
  const double h = (c.x_max - c.x_min) / c.Nx;
  if (!(c.Lk * c.tau < h)) fail("tau", "CFL violation: Lk * tau = " + fmt(c.Lk * c.tau) + " must be < h = " + fmt(h));
  if (c.p < 1) fail("p", "must be >= 1");
  if (c.Nx % c.p != 0) fail("p", "must divide Nx = " + std::to_string(c.Nx));
  if (c.p > 1) {
    if (c.n_nb < 4) fail("n_nb", "must be >= 4");
    if (c.n_nb > c.Nx / c.p) fail("n_nb", "must not exceed the patch size Nx/p = " + std::to_string(c.Nx / c.p));
  }
  if (c.experiment == ExperimentKind::Harmonic2D && !(c.omega > 0.0)) fail("omega", "must be positive");
  if (c.dump_every < 0) fail("dump_every", "must be >= 0");
  if (c.report_every < 0) fail("report_every", "must be >= 0");
  if (c.Ny < 2 || c.Ny % 2 != 0) fail("Ny", "must be a positive even integer");
  if (c.bc.kind == BcKind::Natural && (lines.count("phi_L") || lines.count("phi_R")))
    fail(lines.count("phi_L") ? "phi_L" : "phi_R", "only valid with bc = hermite");
}

}  // namespace

int ExperimentConfig::steps() const { return tau > 0.0 ? static_cast<int>(std::lround(T / tau)) : 0; }

std::vector<std::pair<std::string, std::string>> ExperimentConfig::echo() const {
  std::vector<std::pair<std::string, std::string>> e;
  e.emplace_back("experiment", experiment_name(experiment));
  e.emplace_back("dim", std::to_string(dim));
  e.emplace_back("x_min", fmt(x_min));
  e.emplace_back("x_max", fmt(x_max));
  e.emplace_back("Nx", std::to_string(Nx));
  e.emplace_back("Lk", fmt(Lk));
  e.emplace_back("Nk", std::to_string(Nk));
  e.emplace_back("tau", fmt(tau));
  e.emplace_back("T", fmt(T));
  e.emplace_back("steps", std::to_string(steps()));
  e.emplace_back("n_nb", std::to_string(n_nb));
  e.emplace_back("p", std::to_string(p));
  e.emplace_back("bc", bc.kind == BcKind::Natural ? "natural" : "hermite");
  e.emplace_back("phi_L", fmt(bc.phi_L));
  e.emplace_back("phi_R", fmt(bc.phi_R));
  e.emplace_back("precision", precision == Precision::F64 ? "f64" : "f32");
  e.emplace_back("transport", transport == TransportKind::InProcess ? "inprocess" : "loopback");
  e.emplace_back("out", out_dir);
  e.emplace_back("dump_every", std::to_string(dump_every));
  e.emplace_back("report_every", std::to_string(report_every));
  e.emplace_back("omega", fmt(omega));
  e.emplace_back("Ny", std::to_string(Ny));
  e.emplace_back("alpha", fmt(alpha));
  std::string nks;
  for (std::size_t i = 0; i < tkm_nk.size(); ++i) nks += (i ? "," : "") + std::to_string(tkm_nk[i]);
  e.emplace_back("tkm_nk", nks);
  e.emplace_back("tensor_cache", tensor_cache);
  std::string d;
  for (std::size_t i = 0; i < defaulted.size(); ++i) d += (i ? "," : "") + defaulted[i];
  e.emplace_back("defaulted", d);
  return e;
}

void validate_config(const ExperimentConfig& cfg) {
  LineMap lines;
  if (cfg.tau != 0.0) lines["tau"] = 0;
  lines["T"] = 0;
  check(cfg, lines);
}

ExperimentConfig parse_config(const std::string& text) {
  std::map<std::string, std::pair<std::string, int>> kv;
  std::istringstream in(text);
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(lineno, "expected 'key = value', got '" + line + "'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(lineno, "empty key");
    if (value.empty()) throw ConfigError(lineno, "key '" + key + "': empty value");
    bool known = false;
    for (const std::string& k : known_keys()) known = known || k == key;
    if (!known) throw ConfigError(lineno, "unknown key '" + key + "'");
    if (kv.count(key)) throw ConfigError(lineno, "key '" + key + "' repeated (first set on line " +
                                                     std::to_string(kv[key].second) + ")");
    kv[key] = {value, lineno};
  }
  if (!kv.count("experiment")) throw ConfigError(0, "key 'experiment': missing required key");

  ExperimentConfig c;
  c.experiment = to_experiment(kv["experiment"].first, kv["experiment"].second);
  apply_experiment_defaults(c);
  LineMap lines;
  for (const std::string& key : known_keys()) {
    const auto it = kv.find(key);
    if (it == kv.end()) {
      c.defaulted.push_back(key);
      continue;
    }
    const std::string& v = it->second.first;
    const int ln = it->second.second;
    lines[key] = ln;
    if (key == "experiment") continue;
    if (key == "x_min") c.x_min = to_double(key, v, ln);
    else if (key == "x_max") c.x_max = to_double(key, v, ln);
    else if (key == "Nx") c.Nx = to_int(key, v, ln);
    else if (key == "Lk") c.Lk = to_double(key, v, ln);
    else if (key == "Nk") c.Nk = to_int(key, v, ln);
    else if (key == "tau") c.tau = to_double(key, v, ln);
    else if (key == "T") c.T = to_double(key, v, ln);
    else if (key == "n_nb") c.n_nb = to_int(key, v, ln);
    else if (key == "p") c.p = to_int(key, v, ln);
    else if (key == "bc") {
      if (v == "natural") c.bc.kind = BcKind::Natural;
      else if (v == "hermite") c.bc.kind = BcKind::Hermite;
      else throw ConfigError(ln, "key 'bc': expected natural or hermite, got '" + v + "'");
    } else if (key == "phi_L") c.bc.phi_L = to_double(key, v, ln);
    else if (key == "phi_R") c.bc.phi_R = to_double(key, v, ln);
    else if (key == "precision") {
      if (v == "f64") c.precision = Precision::F64;
      else if (v == "f32") c.precision = Precision::F32;
      else throw ConfigError(ln, "key 'precision': expected f32 or f64, got '" + v + "'");
    } else if (key == "transport") {
      if (v == "inprocess") c.transport = TransportKind::InProcess;
      else if (v == "loopback") c.transport = TransportKind::Loopback;
      else throw ConfigError(ln, "key 'transport': expected inprocess or loopback, got '" + v + "'");
    } else if (key == "out") c.out_dir = v;
    else if (key == "dump_every") c.dump_every = to_int(key, v, ln);
    else if (key == "report_every") c.report_every = to_int(key, v, ln);
    else if (key == "omega") c.omega = to_double(key, v, ln);
    else if (key == "Ny") c.Ny = to_int(key, v, ln);
    else if (key == "alpha") c.alpha = to_double(key, v, ln);
    else if (key == "tkm_nk") {
      c.tkm_nk.clear();
      std::istringstream items(v);
      std::string item;
      while (std::getline(items, item, ',')) c.tkm_nk.push_back(to_int(key, trim(item), ln));
    } else if (key == "tensor_cache") c.tensor_cache = v;
  }
  check(c, lines);
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::ios_base::failure("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

}  // namespace chasm
