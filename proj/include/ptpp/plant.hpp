#pragma once

// Strict-feedback plants
//   x_i' = f_i(x_1..x_i) + g_i(x_1..x_i) * x_{i+1} + w_i(t),  i < n
//   x_n' = f_n(x_1..x_n) + g_n(x_1..x_n) * u       + w_n(t)
//
// The controller only ever sees PlantMetadata (gain bounds and Lipschitz
// rates). Drift, gain and disturbance live in PlantDynamics, which only the
// simulator reads.

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace ptpp {

using StageFunction = std::function<double(std::span<const double> xbar)>;
using Disturbance = std::function<double(double t)>;
/// L_i(xbar_i, ybar_i, t)
using LipschitzRate =
    std::function<double(std::span<const double> xbar, std::span<const double> ybar, double t)>;

struct PlantMetadata {
  std::size_t order = 0;
  std::vector<double> gain_lower;
  std::vector<double> gain_upper;
  std::vector<LipschitzRate> lipschitz;
};

struct PlantDynamics {
  std::vector<StageFunction> drift;
  std::vector<StageFunction> gain;
  std::vector<Disturbance> disturbance;
};

class StrictFeedbackPlant {
 public:
  StrictFeedbackPlant(std::string name, PlantMetadata metadata, PlantDynamics dynamics);

  const std::string& name() const { return name_; }
  std::size_t order() const { return meta_.order; }
  const PlantMetadata& metadata() const { return meta_; }
  const PlantDynamics& dynamics() const { return dyn_; }

  /// Throws std::invalid_argument for a non-finite state or input.
  void state_derivative(std::span<const double> x, double u, double t, std::span<double> dx) const;
  std::vector<double> state_derivative(std::span<const double> x, double u, double t) const;

  /// g_i(xbar_i) for i = 0..n-1 (zero-based stage index).
  double stage_gain(std::size_t stage, std::span<const double> x) const;
  double stage_drift(std::size_t stage, std::span<const double> x) const;

 private:
  std::string name_;
  PlantMetadata meta_;
  PlantDynamics dyn_;
};

struct ReferenceSignal {
  std::function<double(double)> value;
  std::function<double(double)> derivative;
};

/// Physical constants of the electromechanical (motor + link + load) system.
struct ElectromechanicalParams {
  double J = 1.625e-3;     // rotor inertia [kg m^2]
  double m0 = 0.506;       // link mass [kg]
  double M0 = 0.434;       // load mass [kg]
  double L0 = 0.305;       // link length [m]
  double R0 = 0.023;       // load radius [m]
  double B0 = 16.25e-3;    // joint viscous friction [N m s/rad]
  double L = 15.0;         // armature inductance [H]
  double R = 5.0;          // armature resistance [Ohm]
  double K_tau = 0.90;     // current-to-torque coefficient [N m/A]
  double K_B = 0.90;       // back-EMF coefficient
  double g = 9.81;         // gravity

  double inertia_term() const;   // M
  double gravity_term() const;   // N
  double friction_term() const;  // B
};

/// n = 3; states (q, q', I/M); input V/(M L).
StrictFeedbackPlant make_electromechanical(const ElectromechanicalParams& p = {});
/// y_r = sin(10 t) + 2
ReferenceSignal electromechanical_reference();

struct SingleLinkParams {
  double I = 1.0;  // rotational inertia [kg m^2]
  double B = 2.0;  // damping
  double M = 1.0;  // link mass [kg]
  double l = 1.0;  // joint to center of mass [m]
  double g = 9.81;
};

/// n = 2; states (q, q').
StrictFeedbackPlant make_single_link(const SingleLinkParams& p = {});
/// y_r = pi + 2 sin(10 t)
ReferenceSignal single_link_reference();

/// f_i = 0, g_i = 1, no disturbance. Unit gain bounds straddle 1.
StrictFeedbackPlant make_integrator_chain(std::size_t order, double gain_lower = 0.5,
                                          double gain_upper = 2.0);

}  // namespace ptpp
