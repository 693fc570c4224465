#pragma once

// Experiment configuration: presets for the two case-study plants, a flat
// dotted key = value text format, and a runner that writes artifacts.
//
// Keys (SI units throughout):
//   preset                       electromechanical | single-link | custom
//   plant                        electromechanical | single-link | integrator-chain
//   plant.order                  integrator-chain order
//   mode                         adaptive | approximator-free
//   perf.b, perf.c, perf.h       envelope shape; a is derived from eta(0) = pi/2
//   perf.T                       settling time [s]
//   transform.kind               symmetric | asymmetric-upper | asymmetric-lower
//   transform.phi_floor          lower clamp on varphi
//   controller.sign_smoothing    tanh width replacing sign() in zeta; 0 = exact sign
//   controller.xi_denominator    gamma | xi
//   stageK.delta .sigma .rho .tau .varpi .mu .varrho .lambda   (K = 1..n; lambda in s)
//   sim.dt, sim.t_end            [s]
//   sim.x0                       comma separated initial state
//   sim.record_every             decimation of the exported trajectory
//   sim.exact_filter             true | false
//   output.dir                   artifact directory

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ptpp/controller.hpp"
#include "ptpp/perf.hpp"
#include "ptpp/plant.hpp"
#include "ptpp/sim.hpp"

namespace ptpp {

enum class Preset { Electromechanical, SingleLink, Custom };
enum class PlantKind { Electromechanical, SingleLink, IntegratorChain };

std::string to_string(Preset p);
std::string to_string(PlantKind p);

/// Schema violation; the message names the offending key.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct PerfParams {
  double b = 0.1;
  double c = 0.05;
  double h = 1.0;
  double T = 0.5;
};

struct ExperimentConfig {
  Preset preset = Preset::Custom;
  PlantKind plant = PlantKind::Electromechanical;
  std::size_t plant_order = 3;
  ControlMode mode = ControlMode::Adaptive;
  PerfParams perf;
  TransformKind transform_kind = TransformKind::SymmetricTan;
  double phi_floor = 1e-12;
  double sign_smoothing = 0.0;
  XiDenominator xi_denominator = XiDenominator::Gamma;
  std::vector<StageGains> gains;
  SimConfig sim;
  std::filesystem::path output_dir = "ptpp-out";

  /// Throws ConfigError on any inconsistency.
  void validate() const;

  bool operator==(const ExperimentConfig&) const;
};

/// Electromechanical case study: b=0.1, c=0.05, h=1, T=0.5, guards 1e10,
/// varpi=(10,10,5e3), mu=10, varrho=10, lambda=1e-5, x0=(5,3,2).
ExperimentConfig electromechanical_preset();
/// Single-link case study: b=0.9, c=0.05, h=1, T=0.5, guards 1e6, varpi=10,
/// varrho=10, lambda=1e-3, approximator-free, x0=(0,0).
ExperimentConfig single_link_preset();
/// Single-link with varpi=1e-6 and delta=1e-3 on every stage.
ExperimentConfig weak_gain_single_link();

ExperimentConfig preset_config(Preset p);
Preset preset_from_string(const std::string& name);
PlantKind plant_kind_from_string(const std::string& name);

/// Applies one key = value assignment. Throws ConfigError.
void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value);

/// Parses the text format. A `preset` key, if present, must come first and
/// resets every field to that preset before later keys override it.
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Writes every key; parse_config(serialize_config(c)) == c.
std::string serialize_config(const ExperimentConfig& cfg);

StrictFeedbackPlant build_plant(const ExperimentConfig& cfg);
ReferenceSignal build_reference(const ExperimentConfig& cfg);
ControlChain build_chain(const ExperimentConfig& cfg);
Simulator build_simulator(const ExperimentConfig& cfg);

struct ExperimentOutcome {
  SimResult result;
  std::optional<std::string> divergence;
  int exit_code = 1;
  std::filesystem::path trajectory_path;
  std::filesystem::path report_path;
  std::filesystem::path summary_path;
};

/// Runs, then writes trajectory.csv, report.json and summary.txt into
/// cfg.output_dir (created if needed). exit_code is 0 iff both bounds hold.
ExperimentOutcome run_experiment(const ExperimentConfig& cfg, bool write_artifacts = true);

/// Machine-readable form of the verification report.
std::string report_json(const ExperimentConfig& cfg, const VerificationReport& rep,
                        const std::optional<std::string>& divergence);
/// Human-readable form.
std::string report_text(const ExperimentConfig& cfg, const VerificationReport& rep,
                        const std::optional<std::string>& divergence);

}  // namespace ptpp
