#pragma once

// Dynamic-surface control chain with prescribed-time prescribed performance.
//
// Stage 1 acts on the transformed error z1; stages i >= 2 act on
// z_i = x_i - s_i where s_i is a first-order filtered copy of the previous
// virtual control. The last stage produces the plant input u.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "ptpp/fuzzy.hpp"
#include "ptpp/perf.hpp"
#include "ptpp/plant.hpp"

namespace ptpp {

enum class ControlMode {
  // fuzzy estimate phi^T theta_hat with online weight adaptation
  Adaptive,
  // regressor energy phi^T phi in place of the estimate; no adaptive state
  ApproximatorFree,
};

std::string to_string(ControlMode mode);
ControlMode control_mode_from_string(const std::string& name);

/// Which quantity sits under the square root of the xi saturation term.
enum class XiDenominator {
  // sqrt(zeta^2 gamma^2 + tau^2), as published
  Gamma,
  // sqrt(zeta^2 xi^2 + tau^2)
  Xi,
};

struct StageGains {
  double delta = 1.0;   // guard of the beta saturation term
  double sigma = 1.0;   // guard of the chi saturation term
  double rho = 1.0;     // guard of the gamma saturation term (stages >= 2)
  double tau = 1.0;     // guard of the xi saturation term (stages >= 2)
  double varpi = 1.0;   // damping / leakage
  double mu = 1.0;      // adaptation rate
  double varrho = 2.0;  // zeta offset, > 1 (stages >= 2)
  double lambda = 1e-3; // filter time constant [s] (stages >= 2)

  /// Throws std::invalid_argument naming the offending field.
  void validate(std::size_t stage) const;
};

struct ControllerConfig {
  ControlMode mode = ControlMode::Adaptive;
  std::vector<StageGains> gains;
  /// One grid per stage; a single grid is shared by every stage.
  std::vector<GaussianGrid> grids;
  /// sign(z) in zeta becomes tanh(z/eps) when eps > 0.
  double sign_smoothing = 0.0;
  XiDenominator xi_denominator = XiDenominator::Gamma;
};

/// Integrated controller state.
struct ControllerState {
  std::vector<AdaptiveWeights> theta_hat;  // one per stage, empty when approximator-free
  std::vector<double> filters;             // s_2..s_n
};

/// Everything computed during one chain evaluation. Per-stage arrays have
/// length n; entries that do not exist for a stage (r, zeta, gamma, xi at
/// stage 1) are zero.
struct StageSignals {
  double t = 0.0;
  double y_r = 0.0;
  double y_r_dot = 0.0;
  double eta = 0.0;
  double eta_dot = 0.0;
  TransformAux transform;

  std::vector<double> z;
  std::vector<double> r;
  std::vector<double> zeta;
  std::vector<double> beta;
  std::vector<double> chi;
  std::vector<double> gamma;
  std::vector<double> xi;
  std::vector<double> alpha;  // alpha_1..alpha_{n-1}
  /// Adaptive-law drive: z1*varphi*psi at stage 1, zeta_i afterwards.
  std::vector<double> drive;
  std::vector<std::vector<double>> basis;
  double u = 0.0;
};

// -- building blocks --------------------------------------------------------

/// 1/(1 + z^2) + varrho*sign(z), sign(0) = 0. With smoothing > 0 the sign is
/// replaced by tanh(z/smoothing).
double zeta(double z, double varrho, double smoothing = 0.0);

/// s^2 / sqrt(s^2 + guard^2); lies within guard of |s|.
double saturated_term(double s, double guard);

/// First-stage beta. `phi_theta` is phi^T theta_hat, `phi_energy` is phi^T phi.
double beta_first(ControlMode mode, const TransformAux& aux, double phi_theta, double phi_energy,
                  double y_r_dot, double eta_dot);

/// Beta for stages >= 2.
double beta_stage(ControlMode mode, double phi_theta, double phi_energy, double zeta_i,
                  double alpha_prev, double filter, double lambda);

/// L_i(xbar, ybar, t) * ||xbar - ybar||
double chi(const LipschitzRate& rate, std::span<const double> xbar, std::span<const double> ybar,
           double t);

/// gain_upper_prev * |coupling * signal| / zeta_i. The coupling is
/// z1*varphi*psi at stage 2 and zeta_{i-1} later; `signal` is z_i for gamma
/// and r_i for xi.
double coupling_term(double coupling, double signal, double gain_upper_prev, double zeta_i);

/// alpha_1
double virtual_control_first(const StageGains& g, double gain_lower, const TransformAux& aux,
                             double beta, double chi);

/// alpha_i for 2 <= i < n, and u for i = n.
double virtual_control(const StageGains& g, double gain_lower, double zeta_i, double z, double beta,
                       double chi, double gamma, double xi,
                       XiDenominator denom = XiDenominator::Gamma);

/// -varpi*theta + mu*drive*phi, written into `out`.
void adaptive_law_derivative(const StageGains& g, std::span<const double> theta,
                             std::span<const double> basis, double drive, std::span<double> out);

/// (alpha_prev - s)/lambda
double filter_derivative(double lambda, double filter, double alpha_prev);

// -- the chain --------------------------------------------------------------

class ControlChain {
 public:
  /// Validates gains and grids against the plant order.
  ControlChain(PlantMetadata plant, ReferenceSignal reference, ErrorTransform transform,
               ControllerConfig config);

  std::size_t order() const { return plant_.order; }
  const ControllerConfig& config() const { return config_; }
  const ErrorTransform& transform() const { return transform_; }
  const ReferenceSignal& reference() const { return reference_; }
  const PlantMetadata& plant() const { return plant_; }
  const GaussianGrid& grid(std::size_t stage) const;

  /// Evaluates every stage at (x, state, t). Throws FunnelBreach.
  StageSignals evaluate(std::span<const double> x, const ControllerState& state, double t) const;

  /// Zero weights and filters initialised to s_i(0) = alpha_{i-1}(0).
  ControllerState initial_state(std::span<const double> x0) const;

  /// Weight derivatives for every stage from an evaluation (adaptive mode).
  /// Throws std::logic_error in approximator-free mode.
  std::vector<std::vector<double>> adaptive_derivatives(const StageSignals& sig,
                                                        const ControllerState& state) const;

 private:
  PlantMetadata plant_;
  ReferenceSignal reference_;
  ErrorTransform transform_;
  ControllerConfig config_;
};

/// z-dependent part of the energy function: z1^2/2 + sum_i atan(z_i) + varrho_i|z_i|.
/// Partial: the weight-error summands are not observable at runtime.
double partial_energy(const StageSignals& sig, std::span<const StageGains> gains);

}  // namespace ptpp
