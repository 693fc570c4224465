#include "ptpp/plant.hpp"

#include <cmath>
#include <stdexcept>

namespace ptpp {

StrictFeedbackPlant::StrictFeedbackPlant(std::string name, PlantMetadata metadata,
                                         PlantDynamics dynamics)
    : name_(std::move(name)), meta_(std::move(metadata)), dyn_(std::move(dynamics)) {
  const std::size_t n = meta_.order;
  if (n == 0) throw std::invalid_argument("plant order must be positive");
  if (meta_.gain_lower.size() != n || meta_.gain_upper.size() != n || meta_.lipschitz.size() != n ||
      dyn_.drift.size() != n || dyn_.gain.size() != n || dyn_.disturbance.size() != n) {
    throw std::invalid_argument("plant '" + name_ + "': per-stage lists must have length n");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!(meta_.gain_lower[i] > 0) || meta_.gain_upper[i] < meta_.gain_lower[i]) {
      throw std::invalid_argument("plant '" + name_ + "': need 0 < gain_lower <= gain_upper");
    }
  }
}

double StrictFeedbackPlant::stage_gain(std::size_t stage, std::span<const double> x) const {
  return dyn_.gain[stage](x.first(stage + 1));
}

double StrictFeedbackPlant::stage_drift(std::size_t stage, std::span<const double> x) const {
  return dyn_.drift[stage](x.first(stage + 1));
}

void StrictFeedbackPlant::state_derivative(std::span<const double> x, double u, double t,
                                           std::span<double> dx) const {
  const std::size_t n = meta_.order;
  if (x.size() != n || dx.size() != n) throw std::invalid_argument("state dimension mismatch");
  for (double v : x) {
    if (!std::isfinite(v)) throw std::invalid_argument("state_derivative: non-finite state");
  }
  if (!std::isfinite(u)) throw std::invalid_argument("state_derivative: non-finite input");

  for (std::size_t i = 0; i < n; ++i) {
    const auto xbar = x.first(i + 1);
    const double next = (i + 1 < n) ? x[i + 1] : u;
    dx[i] = dyn_.drift[i](xbar) + dyn_.gain[i](xbar) * next + dyn_.disturbance[i](t);
  }
}

std::vector<double> StrictFeedbackPlant::state_derivative(std::span<const double> x, double u,
                                                          double t) const {
  std::vector<double> dx(x.size());
  state_derivative(x, u, t, dx);
  return dx;
}

double ElectromechanicalParams::inertia_term() const {
  return J / K_tau + m0 * L0 * L0 / (3.0 * K_tau) + M0 * L0 * L0 / K_tau +
         2.0 * M0 * R0 * R0 / (5.0 * K_tau);
}

double ElectromechanicalParams::gravity_term() const {
  return m0 * L0 * g / (2.0 * K_tau) + M0 * L0 * g / K_tau;
}

double ElectromechanicalParams::friction_term() const { return B0 / K_tau; }

namespace {

LipschitzRate constant_rate(double value) {
  return [value](std::span<const double>, std::span<const double>, double) { return value; };
}

StageFunction constant_stage(double value) {
  return [value](std::span<const double>) { return value; };
}

}  // namespace

StrictFeedbackPlant make_electromechanical(const ElectromechanicalParams& p) {
  const double M = p.inertia_term();
  const double N = p.gravity_term();
  const double B = p.friction_term();
  const double KB = p.K_B;
  const double R = p.R;
  const double L = p.L;

  PlantMetadata meta;
  meta.order = 3;
  meta.gain_lower = {0.1, 0.1, 0.1};
  meta.gain_upper = {10.0, 10.0, 10.0};
  meta.lipschitz = {constant_rate(1.0), constant_rate((N + B) / M),
                    constant_rate((KB + R) / (M * L))};

  PlantDynamics dyn;
  dyn.drift = {
      constant_stage(0.0),
      [=](std::span<const double> x) { return -(N / M) * std::sin(x[0]) - (B / M) * x[1]; },
      // the R/(M L) coefficient on x3 follows the published state-space form
      [=](std::span<const double> x) { return -(KB / (M * L)) * x[1] - (R / (M * L)) * x[2]; },
  };
  dyn.gain = {constant_stage(1.0), constant_stage(1.0), constant_stage(1.0)};
  dyn.disturbance = {
      [](double t) { return 2.0 * std::sin(5.0 * t); },
      [](double t) { return 5.0 * std::cos(2.0 * t); },
      [](double t) { return 10.0 * std::sin(t); },
  };
  return StrictFeedbackPlant("electromechanical", std::move(meta), std::move(dyn));
}

ReferenceSignal electromechanical_reference() {
  return {[](double t) { return std::sin(10.0 * t) + 2.0; },
          [](double t) { return 10.0 * std::cos(10.0 * t); }};
}

StrictFeedbackPlant make_single_link(const SingleLinkParams& p) {
  const double I = p.I;
  const double B = p.B;
  const double mgl = p.M * p.g * p.l;

  PlantMetadata meta;
  meta.order = 2;
  meta.gain_lower = {0.5, 0.5};
  meta.gain_upper = {10.0, 10.0};
  meta.lipschitz = {constant_rate(1.0), constant_rate((B + mgl) / I)};

  PlantDynamics dyn;
  dyn.drift = {
      constant_stage(0.0),
      [=](std::span<const double> x) { return -(B * x[1] + mgl * std::sin(x[0])) / I; },
  };
  dyn.gain = {constant_stage(1.0), constant_stage(1.0 / I)};
  dyn.disturbance = {[](double) { return 0.0; },
                     [](double t) { return 10.0 * std::cos(5.0 * t); }};
  return StrictFeedbackPlant("single-link", std::move(meta), std::move(dyn));
}

ReferenceSignal single_link_reference() {
  return {[](double t) { return 3.14159265358979323846 + 2.0 * std::sin(10.0 * t); },
          [](double t) { return 20.0 * std::cos(10.0 * t); }};
}

StrictFeedbackPlant make_integrator_chain(std::size_t order, double gain_lower,
                                          double gain_upper) {
  PlantMetadata meta;
  meta.order = order;
  meta.gain_lower.assign(order, gain_lower);
  meta.gain_upper.assign(order, gain_upper);
  meta.lipschitz.assign(order, constant_rate(1.0));

  PlantDynamics dyn;
  dyn.drift.assign(order, constant_stage(0.0));
  dyn.gain.assign(order, constant_stage(1.0));
  dyn.disturbance.assign(order, [](double) { return 0.0; });
  return StrictFeedbackPlant("integrator-chain", std::move(meta), std::move(dyn));
}

}  // namespace ptpp
