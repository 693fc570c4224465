// Command-line experiment runner.
//
//   ptpp_run --preset electromechanical
//   ptpp_run --preset single-link --x0 0.2,0 --out runs/sl
//   ptpp_run --config my.cfg --set stage2.lambda=2e-3
//   ptpp_run --sweep a.cfg b.cfg c.cfg --jobs 3
//
// Exit status is 0 iff every run keeps both performance bounds.

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <future>
#include <iostream>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "ptpp/experiment.hpp"

namespace fs = std::filesystem;
using namespace ptpp;

namespace {

struct Overrides {
  std::optional<std::string> mode;
  std::optional<double> dt;
  std::optional<double> t_end;
  std::optional<std::string> x0;
  std::optional<double> sign_smoothing;
  std::vector<std::string> settings;
};

ExperimentConfig base_config(const std::string& preset) {
  if (preset == "single-link-weak") return weak_gain_single_link();
  return preset_config(preset_from_string(preset));
}

void apply(ExperimentConfig& cfg, const Overrides& o) {
  if (o.mode) apply_setting(cfg, "mode", *o.mode);
  if (o.dt) cfg.sim.dt = *o.dt;
  if (o.t_end) cfg.sim.t_end = *o.t_end;
  if (o.x0) apply_setting(cfg, "sim.x0", *o.x0);
  if (o.sign_smoothing) cfg.sign_smoothing = *o.sign_smoothing;
  for (const auto& s : o.settings) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("--set " + s + ": expected key=value");
    apply_setting(cfg, s.substr(0, eq), s.substr(eq + 1));
  }
  cfg.validate();
}

std::string run_one(const ExperimentConfig& cfg, int& exit_code) {
  const auto out = run_experiment(cfg);
  exit_code = out.exit_code;
  std::ostringstream os;
  os << report_text(cfg, out.result.report, out.divergence);
  os << "artifacts        " << cfg.output_dir.string() << '\n';
  return os.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Prescribed-time tracking control experiments"};

  std::string preset = "electromechanical";
  std::string config_path;
  std::vector<std::string> sweep;
  std::string out_dir;
  unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
  bool print_config = false;
  Overrides o;

  app.add_option("--preset", preset, "electromechanical | single-link | single-link-weak | custom")
      ->check(CLI::IsMember({"electromechanical", "single-link", "single-link-weak", "custom"}));
  app.add_option("--config", config_path, "key = value configuration file")
      ->check(CLI::ExistingFile);
  app.add_option("--sweep", sweep, "run several configuration files in parallel")
      ->check(CLI::ExistingFile);
  app.add_option("--mode", o.mode, "adaptive | approximator-free")
      ->check(CLI::IsMember({"adaptive", "approximator-free"}));
  app.add_option("--dt", o.dt, "integration step [s]")->check(CLI::PositiveNumber);
  app.add_option("--t-end", o.t_end, "horizon [s]")->check(CLI::PositiveNumber);
  app.add_option("--x0", o.x0, "initial state, comma separated");
  app.add_option("--sign-smoothing", o.sign_smoothing, "tanh width replacing sign(z); 0 = exact")
      ->check(CLI::NonNegativeNumber);
  app.add_option("--set", o.settings, "extra key=value overrides (repeatable)");
  app.add_option("--out", out_dir, "artifact directory (default: $PTPP_OUTPUT_DIR or ptpp-out)");
  app.add_option("--jobs", jobs, "parallel workers for --sweep")->check(CLI::PositiveNumber);
  app.add_flag("--print-config", print_config, "print the effective configuration and exit");
  app.get_option("--config")->excludes("--sweep");

  CLI11_PARSE(app, argc, argv);

  const char* env_out = std::getenv("PTPP_OUTPUT_DIR");
  auto place = [&](ExperimentConfig& cfg, const std::string& leaf) {
    if (!out_dir.empty()) {
      cfg.output_dir = sweep.empty() ? fs::path(out_dir) : fs::path(out_dir) / leaf;
    } else if (env_out && *env_out) {
      cfg.output_dir = fs::path(env_out) / leaf;
    }
  };

  std::vector<ExperimentConfig> configs;
  try {
    if (sweep.empty()) {
      ExperimentConfig cfg = config_path.empty() ? base_config(preset) : load_config(config_path);
      apply(cfg, o);
      place(cfg, config_path.empty() ? preset : fs::path(config_path).stem().string());
      configs.push_back(std::move(cfg));
    } else {
      for (const auto& path : sweep) {
        ExperimentConfig cfg = load_config(path);
        apply(cfg, o);
        place(cfg, fs::path(path).stem().string());
        configs.push_back(std::move(cfg));
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  }

  if (print_config) {
    for (const auto& c : configs) std::cout << serialize_config(c) << '\n';
    return 0;
  }

  std::vector<int> codes(configs.size(), 1);
  std::vector<std::string> texts(configs.size());
  std::mutex io;
  std::size_t next = 0;
  auto worker = [&] {
    for (;;) {
      std::size_t i;
      {
        std::lock_guard lock(io);
        if (next >= configs.size()) return;
        i = next++;
      }
      try {
        texts[i] = run_one(configs[i], codes[i]);
      } catch (const std::exception& e) {
        texts[i] = std::string("error: ") + e.what() + '\n';
        codes[i] = 2;
      }
    }
  };
  std::vector<std::thread> pool;
  const auto n = std::min<std::size_t>(jobs, configs.size());
  for (std::size_t k = 0; k < n; ++k) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  int status = 0;
  for (std::size_t i = 0; i < configs.size(); ++i) {
    if (configs.size() > 1) std::cout << "== " << sweep[i] << '\n';
    std::cout << texts[i];
    if (codes[i] != 0) status = std::max(status, codes[i]);
  }
  return status;
}
