#include "ptpp/experiment.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

namespace ptpp {

std::string to_string(Preset p) {
  switch (p) {
    case Preset::Electromechanical:
      return "electromechanical";
    case Preset::SingleLink:
      return "single-link";
    case Preset::Custom:
      return "custom";
  }
  return "custom";
}

std::string to_string(PlantKind p) {
  switch (p) {
    case PlantKind::Electromechanical:
      return "electromechanical";
    case PlantKind::SingleLink:
      return "single-link";
    case PlantKind::IntegratorChain:
      return "integrator-chain";
  }
  return "electromechanical";
}

Preset preset_from_string(const std::string& name) {
  if (name == "electromechanical") return Preset::Electromechanical;
  if (name == "single-link") return Preset::SingleLink;
  if (name == "custom") return Preset::Custom;
  throw ConfigError("preset: unknown value '" + name + "'");
}

PlantKind plant_kind_from_string(const std::string& name) {
  if (name == "electromechanical") return PlantKind::Electromechanical;
  if (name == "single-link") return PlantKind::SingleLink;
  if (name == "integrator-chain") return PlantKind::IntegratorChain;
  throw ConfigError("plant: unknown value '" + name + "'");
}

ExperimentConfig electromechanical_preset() {
  ExperimentConfig cfg;
  cfg.preset = Preset::Electromechanical;
  cfg.plant = PlantKind::Electromechanical;
  cfg.plant_order = 3;
  cfg.mode = ControlMode::Adaptive;
  cfg.perf = {0.1, 0.05, 1.0, 0.5};
  StageGains g;
  g.delta = g.sigma = g.rho = g.tau = 1e10;
  g.varpi = 10.0;
  g.mu = 10.0;
  g.varrho = 10.0;
  g.lambda = 1e-5;
  cfg.gains = {g, g, g};
  cfg.gains[2].varpi = 5e3;
  cfg.sim.dt = 1e-5;
  cfg.sim.t_end = 3.0;
  cfg.sim.x0 = {5.0, 3.0, 2.0};
  cfg.sim.record_every = 10;
  cfg.sim.exact_filter = true;
  cfg.output_dir = "ptpp-out/electromechanical";
  return cfg;
}

ExperimentConfig single_link_preset() {
  ExperimentConfig cfg;
  cfg.preset = Preset::SingleLink;
  cfg.plant = PlantKind::SingleLink;
  cfg.plant_order = 2;
  cfg.mode = ControlMode::ApproximatorFree;
  cfg.perf = {0.9, 0.05, 1.0, 0.5};
  StageGains g;
  g.delta = g.sigma = g.rho = g.tau = 1e6;
  g.varpi = 10.0;
  g.mu = 10.0;
  g.varrho = 10.0;
  g.lambda = 1e-3;
  cfg.gains = {g, g};
  cfg.sim.dt = 1e-5;
  cfg.sim.t_end = 3.0;
  cfg.sim.x0 = {0.0, 0.0};
  cfg.sim.record_every = 10;
  cfg.sim.exact_filter = true;
  cfg.output_dir = "ptpp-out/single-link";
  return cfg;
}

ExperimentConfig weak_gain_single_link() {
  auto cfg = single_link_preset();
  cfg.preset = Preset::Custom;
  for (auto& g : cfg.gains) {
    g.varpi = 1e-6;
    g.delta = 1e-3;
  }
  cfg.output_dir = "ptpp-out/single-link-weak";
  return cfg;
}

ExperimentConfig preset_config(Preset p) {
  switch (p) {
    case Preset::Electromechanical:
      return electromechanical_preset();
    case Preset::SingleLink:
      return single_link_preset();
    case Preset::Custom:
      break;
  }
  ExperimentConfig cfg = electromechanical_preset();
  cfg.preset = Preset::Custom;
  cfg.output_dir = "ptpp-out/custom";
  return cfg;
}

void ExperimentConfig::validate() const {
  const std::size_t n = (plant == PlantKind::Electromechanical) ? 3
                        : (plant == PlantKind::SingleLink)      ? 2
                                                                : plant_order;
  if (n < 2) throw ConfigError("plant.order: must be at least 2");
  if (plant != PlantKind::IntegratorChain && plant_order != n) {
    throw ConfigError("plant.order: " + to_string(plant) + " has order " + std::to_string(n));
  }
  if (gains.size() != n) {
    throw ConfigError("stageK: expected " + std::to_string(n) + " stage blocks, found " +
                      std::to_string(gains.size()));
  }
  for (std::size_t i = 0; i < n; ++i) {
    try {
      gains[i].validate(i);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("stage") + std::to_string(i + 1) + ": " + e.what());
    }
  }
  if (!(perf.c > 0 && perf.c < kHalfPi)) throw ConfigError("perf.c: must lie in (0, pi/2)");
  if (!(perf.b > 0)) throw ConfigError("perf.b: must be positive");
  if (!(perf.h > 0)) throw ConfigError("perf.h: must be positive");
  if (!(perf.T > 0)) throw ConfigError("perf.T: must be positive");
  if (!(phi_floor > 0 && phi_floor < 1)) throw ConfigError("transform.phi_floor: must lie in (0, 1)");
  if (sign_smoothing < 0) throw ConfigError("controller.sign_smoothing: must be >= 0");
  double lambda_min = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < n; ++i) lambda_min = std::min(lambda_min, gains[i].lambda);
  try {
    sim.validate(n, lambda_min);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

bool ExperimentConfig::operator==(const ExperimentConfig& o) const {
  auto gains_eq = [](const StageGains& a, const StageGains& b) {
    return a.delta == b.delta && a.sigma == b.sigma && a.rho == b.rho && a.tau == b.tau &&
           a.varpi == b.varpi && a.mu == b.mu && a.varrho == b.varrho && a.lambda == b.lambda;
  };
  if (gains.size() != o.gains.size()) return false;
  for (std::size_t i = 0; i < gains.size(); ++i) {
    if (!gains_eq(gains[i], o.gains[i])) return false;
  }
  return preset == o.preset && plant == o.plant && plant_order == o.plant_order &&
         mode == o.mode && perf.b == o.perf.b && perf.c == o.perf.c && perf.h == o.perf.h &&
         perf.T == o.perf.T && transform_kind == o.transform_kind && phi_floor == o.phi_floor &&
         sign_smoothing == o.sign_smoothing && xi_denominator == o.xi_denominator &&
         sim.dt == o.sim.dt && sim.t_end == o.sim.t_end && sim.x0 == o.sim.x0 &&
         sim.record_every == o.sim.record_every && sim.exact_filter == o.sim.exact_filter &&
         output_dir == o.output_dir;
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& value) {
  double out = 0.0;
  const char* first = value.data();
  const char* last = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(first, last, out);
  if (ec != std::errc() || ptr != last || !std::isfinite(out)) {
    throw ConfigError(key + ": expected a finite number, got '" + value + "'");
  }
  return out;
}

std::size_t parse_count(const std::string& key, const std::string& value) {
  std::size_t out = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw ConfigError(key + ": expected a non-negative integer, got '" + value + "'");
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ConfigError(key + ": expected true or false, got '" + value + "'");
}

std::vector<double> parse_list(const std::string& key, const std::string& value) {
  std::vector<double> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(key, trim(item)));
  if (out.empty()) throw ConfigError(key + ": expected a comma separated list");
  return out;
}

// shortest text that reads back to the same double
std::string exact(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

StageGains& stage_slot(ExperimentConfig& cfg, std::size_t index) {
  if (index == 0 || index > 64) throw ConfigError("stageK: stage index must be in 1..64");
  if (cfg.gains.size() < index) cfg.gains.resize(index, cfg.gains.empty() ? StageGains{} : cfg.gains.back());
  return cfg.gains[index - 1];
}

// keep one gain block per stage when the plant order changes
void fit_gains(ExperimentConfig& cfg, std::size_t order) {
  if (order == 0 || order > 64) return;
  cfg.gains.resize(order, cfg.gains.empty() ? StageGains{} : cfg.gains.back());
}

}  // namespace

void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  try {
    if (key == "preset") {
      cfg = preset_config(preset_from_string(value));
    } else if (key == "plant") {
      cfg.plant = plant_kind_from_string(value);
      if (cfg.plant == PlantKind::Electromechanical) cfg.plant_order = 3;
      if (cfg.plant == PlantKind::SingleLink) cfg.plant_order = 2;
      fit_gains(cfg, cfg.plant_order);
    } else if (key == "plant.order") {
      cfg.plant_order = parse_count(key, value);
      if (cfg.plant == PlantKind::IntegratorChain) fit_gains(cfg, cfg.plant_order);
    } else if (key == "mode") {
      cfg.mode = control_mode_from_string(value);
    } else if (key == "perf.b") {
      cfg.perf.b = parse_double(key, value);
    } else if (key == "perf.c") {
      cfg.perf.c = parse_double(key, value);
    } else if (key == "perf.h") {
      cfg.perf.h = parse_double(key, value);
    } else if (key == "perf.T") {
      cfg.perf.T = parse_double(key, value);
    } else if (key == "transform.kind") {
      cfg.transform_kind = transform_kind_from_string(value);
    } else if (key == "transform.phi_floor") {
      cfg.phi_floor = parse_double(key, value);
    } else if (key == "controller.sign_smoothing") {
      cfg.sign_smoothing = parse_double(key, value);
    } else if (key == "controller.xi_denominator") {
      if (value == "gamma") {
        cfg.xi_denominator = XiDenominator::Gamma;
      } else if (value == "xi") {
        cfg.xi_denominator = XiDenominator::Xi;
      } else {
        throw ConfigError(key + ": expected gamma or xi");
      }
    } else if (key == "sim.dt") {
      cfg.sim.dt = parse_double(key, value);
    } else if (key == "sim.t_end") {
      cfg.sim.t_end = parse_double(key, value);
    } else if (key == "sim.x0") {
      cfg.sim.x0 = parse_list(key, value);
    } else if (key == "sim.record_every") {
      cfg.sim.record_every = parse_count(key, value);
    } else if (key == "sim.exact_filter") {
      cfg.sim.exact_filter = parse_bool(key, value);
    } else if (key == "output.dir") {
      cfg.output_dir = value;
    } else if (key.rfind("stage", 0) == 0) {
      const auto dot = key.find('.');
      if (dot == std::string::npos) throw ConfigError(key + ": expected stageK.field");
      const auto index = parse_count(key, key.substr(5, dot - 5));
      const auto field = key.substr(dot + 1);
      auto& g = stage_slot(cfg, index);
      const double v = parse_double(key, value);
      if (field == "delta") g.delta = v;
      else if (field == "sigma") g.sigma = v;
      else if (field == "rho") g.rho = v;
      else if (field == "tau") g.tau = v;
      else if (field == "varpi") g.varpi = v;
      else if (field == "mu") g.mu = v;
      else if (field == "varrho") g.varrho = v;
      else if (field == "lambda") g.lambda = v;
      else throw ConfigError(key + ": unknown stage field '" + field + "'");
    } else {
      throw ConfigError(key + ": unknown key");
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(key + ": " + e.what());
  }
}

ExperimentConfig parse_config(std::istream& in) {
  ExperimentConfig cfg = preset_config(Preset::Custom);
  std::string line;
  std::size_t lineno = 0;
  bool seen_other = false;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    }
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (key == "preset" && seen_other) {
      throw ConfigError("preset: must be the first key (line " + std::to_string(lineno) + ")");
    }
    seen_other = true;
    apply_setting(cfg, key, value);
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  return parse_config(in);
}

std::string serialize_config(const ExperimentConfig& cfg) {
  std::ostringstream os;
  os << "preset = " << to_string(cfg.preset) << '\n';
  os << "plant = " << to_string(cfg.plant) << '\n';
  os << "plant.order = " << cfg.plant_order << '\n';
  os << "mode = " << to_string(cfg.mode) << '\n';
  os << "perf.b = " << exact(cfg.perf.b) << '\n';
  os << "perf.c = " << exact(cfg.perf.c) << '\n';
  os << "perf.h = " << exact(cfg.perf.h) << '\n';
  os << "perf.T = " << exact(cfg.perf.T) << '\n';
  os << "transform.kind = " << to_string(cfg.transform_kind) << '\n';
  os << "transform.phi_floor = " << exact(cfg.phi_floor) << '\n';
  os << "controller.sign_smoothing = " << exact(cfg.sign_smoothing) << '\n';
  os << "controller.xi_denominator = "
     << (cfg.xi_denominator == XiDenominator::Gamma ? "gamma" : "xi") << '\n';
  for (std::size_t i = 0; i < cfg.gains.size(); ++i) {
    const auto& g = cfg.gains[i];
    const auto p = "stage" + std::to_string(i + 1) + ".";
    os << p << "delta = " << exact(g.delta) << '\n';
    os << p << "sigma = " << exact(g.sigma) << '\n';
    os << p << "rho = " << exact(g.rho) << '\n';
    os << p << "tau = " << exact(g.tau) << '\n';
    os << p << "varpi = " << exact(g.varpi) << '\n';
    os << p << "mu = " << exact(g.mu) << '\n';
    os << p << "varrho = " << exact(g.varrho) << '\n';
    os << p << "lambda = " << exact(g.lambda) << '\n';
  }
  os << "sim.dt = " << exact(cfg.sim.dt) << '\n';
  os << "sim.t_end = " << exact(cfg.sim.t_end) << '\n';
  os << "sim.x0 = ";
  for (std::size_t i = 0; i < cfg.sim.x0.size(); ++i) os << (i ? "," : "") << exact(cfg.sim.x0[i]);
  os << '\n';
  os << "sim.record_every = " << cfg.sim.record_every << '\n';
  os << "sim.exact_filter = " << (cfg.sim.exact_filter ? "true" : "false") << '\n';
  os << "output.dir = " << cfg.output_dir.string() << '\n';
  return os.str();
}

StrictFeedbackPlant build_plant(const ExperimentConfig& cfg) {
  switch (cfg.plant) {
    case PlantKind::Electromechanical:
      return make_electromechanical();
    case PlantKind::SingleLink:
      return make_single_link();
    case PlantKind::IntegratorChain:
      return make_integrator_chain(cfg.plant_order);
  }
  throw ConfigError("plant: unsupported");
}

ReferenceSignal build_reference(const ExperimentConfig& cfg) {
  switch (cfg.plant) {
    case PlantKind::Electromechanical:
      return electromechanical_reference();
    case PlantKind::SingleLink:
      return single_link_reference();
    case PlantKind::IntegratorChain:
      return {[](double t) { return std::sin(t); }, [](double t) { return std::cos(t); }};
  }
  throw ConfigError("plant: unsupported");
}

ControlChain build_chain(const ExperimentConfig& cfg) {
  const auto plant = build_plant(cfg);
  ControllerConfig cc;
  cc.mode = cfg.mode;
  cc.gains = cfg.gains;
  cc.grids = {make_reference_grid()};
  cc.sign_smoothing = cfg.sign_smoothing;
  cc.xi_denominator = cfg.xi_denominator;
  ErrorTransform transform(perf_from_terminal(cfg.perf.b, cfg.perf.c, cfg.perf.h, cfg.perf.T),
                           cfg.transform_kind, cfg.phi_floor);
  return ControlChain(plant.metadata(), build_reference(cfg), transform, std::move(cc));
}

Simulator build_simulator(const ExperimentConfig& cfg) {
  cfg.validate();
  return Simulator(build_plant(cfg), build_chain(cfg), cfg.sim);
}

std::string report_json(const ExperimentConfig& cfg, const VerificationReport& rep,
                        const std::optional<std::string>& divergence) {
  nlohmann::json j;
  const auto perf = perf_from_terminal(cfg.perf.b, cfg.perf.c, cfg.perf.h, cfg.perf.T);
  j["preset"] = to_string(cfg.preset);
  j["plant"] = to_string(cfg.plant);
  j["mode"] = to_string(cfg.mode);
  j["perf"] = {{"a", perf.a()}, {"b", perf.b()}, {"c", perf.c()}, {"h", perf.h()},
               {"T", perf.settling_time()}};
  j["x0"] = cfg.sim.x0;
  j["dt"] = cfg.sim.dt;
  j["t_end"] = cfg.sim.t_end;
  j["transient_ok"] = rep.transient_ok;
  j["steady_ok"] = rep.steady_ok;
  j["passed"] = rep.passed() && !divergence;
  j["all_finite"] = rep.all_finite && !divergence;
  j["max_abs_error"] = rep.max_abs_error;
  j["max_abs_error_after_T"] = rep.max_abs_error_after_T;
  j["max_abs_control"] = rep.max_abs_control;
  j["steady_bound"] = rep.steady_bound;
  j["steps"] = rep.steps;
  j["breach_time"] = rep.breach_time ? nlohmann::json(*rep.breach_time) : nlohmann::json(nullptr);
  j["divergence"] = divergence ? nlohmann::json(*divergence) : nlohmann::json(nullptr);
  j["signal_sup_norms"] = rep.signal_sup_norms;
  return j.dump(2);
}

std::string report_text(const ExperimentConfig& cfg, const VerificationReport& rep,
                        const std::optional<std::string>& divergence) {
  std::ostringstream os;
  os << std::setprecision(6);
  os << "plant            " << to_string(cfg.plant) << " (" << to_string(cfg.mode) << ")\n";
  os << "x0              ";
  for (double v : cfg.sim.x0) os << ' ' << v;
  os << '\n';
  os << "transient bound  " << (rep.transient_ok ? "held" : "VIOLATED") << '\n';
  os << "steady bound     " << (rep.steady_ok ? "held" : "VIOLATED") << "  (|e| < "
     << rep.steady_bound << " for t >= " << cfg.perf.T << ")\n";
  os << "max |e|          " << rep.max_abs_error << '\n';
  os << "max |e|, t >= T  " << rep.max_abs_error_after_T << '\n';
  os << "max |u|          " << rep.max_abs_control << '\n';
  if (rep.breach_time) os << "breach at t =    " << *rep.breach_time << '\n';
  if (divergence) os << "divergence       " << *divergence << '\n';
  os << "result           " << (rep.passed() && !divergence ? "PASS" : "FAIL") << '\n';
  return os.str();
}

ExperimentOutcome run_experiment(const ExperimentConfig& cfg, bool write_artifacts) {
  ExperimentOutcome out;
  const auto sim = build_simulator(cfg);
  try {
    out.result = sim.run();
  } catch (const DivergenceError& e) {
    std::ostringstream os;
    os << e.what() << " (t=" << e.time() << ")";
    out.divergence = os.str();
    out.result.report.all_finite = false;
  }
  const auto& rep = out.result.report;
  out.exit_code = (rep.passed() && !out.divergence) ? 0 : 1;

  if (write_artifacts) {
    std::filesystem::create_directories(cfg.output_dir);
    out.trajectory_path = cfg.output_dir / "trajectory.csv";
    out.report_path = cfg.output_dir / "report.json";
    out.summary_path = cfg.output_dir / "summary.txt";
    {
      std::ofstream f(out.trajectory_path);
      write_trajectory(f, out.result.trajectory, sim.plant().order());
    }
    std::ofstream(out.report_path) << report_json(cfg, rep, out.divergence) << '\n';
    std::ofstream(out.summary_path) << report_text(cfg, rep, out.divergence);
  }
  return out;
}

}  // namespace ptpp
