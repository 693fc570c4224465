#pragma once

// Fixed-step simulation of plant + filters + adaptive weights, with
// verification of the prescribed performance bounds.

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ptpp/controller.hpp"
#include "ptpp/plant.hpp"

namespace ptpp {

/// Raised when the integrated state stops being finite.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, double time);
  double time() const { return time_; }

 private:
  double time_;
};

struct SimConfig {
  double dt = 1e-5;
  double t_end = 3.0;
  std::vector<double> x0;
  std::size_t record_every = 10;
  /// Advance the filters with the closed-form exponential, holding the
  /// previous virtual control constant over the step. When false the filters
  /// are integrated by RK4 with everything else and dt must be <= lambda_min/5.
  bool exact_filter = true;

  void validate(std::size_t order, double lambda_min) const;
};

/// Augmented integration state.
struct SimState {
  double t = 0.0;
  std::vector<double> x;
  ControllerState controller;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<std::vector<double>> states;
  std::vector<std::vector<double>> filters;
  std::vector<std::vector<double>> theta_norms;
  std::vector<StageSignals> signals;
  std::vector<double> eta;
  std::optional<double> breach;
  std::string breach_message;
};

struct VerificationReport {
  bool transient_ok = false;   // |atan e| < eta(t) at every step
  bool steady_ok = false;      // |e| < tan(c) at every step with t >= T
  bool all_finite = false;
  double max_abs_error = 0.0;
  double max_abs_error_after_T = 0.0;
  double max_abs_control = 0.0;
  double steady_bound = 0.0;   // tan(c)
  std::size_t steps = 0;
  std::optional<double> breach_time;
  std::map<std::string, double> signal_sup_norms;

  bool passed() const { return transient_ok && steady_ok; }
};

struct SimResult {
  Trajectory trajectory;
  VerificationReport report;
};

class Simulator {
 public:
  Simulator(StrictFeedbackPlant plant, ControlChain chain, SimConfig config);

  const SimConfig& config() const { return config_; }
  const ControlChain& chain() const { return chain_; }
  const StrictFeedbackPlant& plant() const { return plant_; }

  /// State at t = 0 with filters initialised from the chain.
  SimState initial_state() const;

  /// One RK4 step of length dt. Throws FunnelBreach if any stage leaves the
  /// funnel, DivergenceError if the result is not finite.
  void step(SimState& state, double dt) const;

  /// Integrates [0, t_end]. Stops at the first breach; the breach is recorded
  /// in the trajectory and report. DivergenceError propagates.
  SimResult run() const;

 private:
  // augmented vector layout: x (n) | s_2..s_n | theta_1 .. theta_n
  std::vector<double> pack(const SimState& s) const;
  void unpack(const std::vector<double>& y, SimState& s) const;
  void derivative(const SimState& s, double t, std::vector<double>& dy) const;

  StrictFeedbackPlant plant_;
  ControlChain chain_;
  SimConfig config_;
};

struct ConvergenceResult {
  double coarse = 0.0;  // maxAbsError at dt
  double fine = 0.0;    // maxAbsError at dt/2
  double abs_diff = 0.0;
  double rel_diff = 0.0;
};

/// Runs at dt and dt/2 and compares max |e|. Throws std::runtime_error if
/// either run breaches.
ConvergenceResult convergence_check(const StrictFeedbackPlant& plant, const ControlChain& chain,
                                    SimConfig config);

/// Delimited text, one row per recorded sample, header first:
/// t, x1..xn, y_r, e, atan_e, eta, neg_eta, u, s2..sn, alpha1..alpha(n-1), theta_norm1..n
void write_trajectory(std::ostream& os, const Trajectory& traj, std::size_t order,
                      char delimiter = ',');
std::vector<std::string> trajectory_columns(std::size_t order);

}  // namespace ptpp
