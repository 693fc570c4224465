#include "ptpp/controller.hpp"

#include <cmath>
#include <stdexcept>

namespace ptpp {

namespace {

double sq(double v) { return v * v; }

double sign_of(double z, double smoothing) {
  if (smoothing > 0.0) return std::tanh(z / smoothing);
  return static_cast<double>((z > 0.0) - (z < 0.0));
}

// -scale * v^2 / (gain_lower * sqrt(scale^2 v^2 + guard^2))
double saturated_feedback(double scale, double v, double guard, double gain_lower) {
  return -scale * v * v / (gain_lower * std::sqrt(sq(scale * v) + sq(guard)));
}

}  // namespace

std::string to_string(ControlMode mode) {
  return mode == ControlMode::Adaptive ? "adaptive" : "approximator-free";
}

ControlMode control_mode_from_string(const std::string& name) {
  if (name == "adaptive") return ControlMode::Adaptive;
  if (name == "approximator-free") return ControlMode::ApproximatorFree;
  throw std::invalid_argument("unknown control mode '" + name +
                              "' (expected adaptive or approximator-free)");
}

void StageGains::validate(std::size_t stage) const {
  auto require = [stage](bool ok, const char* field) {
    if (!ok) {
      throw std::invalid_argument("stage " + std::to_string(stage + 1) + ": " + field +
                                  " must be positive");
    }
  };
  require(delta > 0, "delta");
  require(sigma > 0, "sigma");
  require(varpi > 0, "varpi");
  require(mu > 0, "mu");
  if (stage > 0) {
    require(rho > 0, "rho");
    require(tau > 0, "tau");
    require(lambda > 0, "lambda");
    if (!(varrho > 1)) {
      throw std::invalid_argument("stage " + std::to_string(stage + 1) +
                                  ": varrho must exceed 1");
    }
  }
}

double zeta(double z, double varrho, double smoothing) {
  return 1.0 / (1.0 + z * z) + varrho * sign_of(z, smoothing);
}

double saturated_term(double s, double guard) { return s * s / std::sqrt(s * s + guard * guard); }

double beta_first(ControlMode mode, const TransformAux& aux, double phi_theta, double phi_energy,
                  double y_r_dot, double eta_dot) {
  const double estimate = (mode == ControlMode::Adaptive)
                              ? phi_theta
                              : aux.z1 * aux.error_gain * phi_energy;
  return estimate - y_r_dot + aux.eta_ratio * eta_dot;
}

double beta_stage(ControlMode mode, double phi_theta, double phi_energy, double zeta_i,
                  double alpha_prev, double filter, double lambda) {
  const double estimate = (mode == ControlMode::Adaptive) ? phi_theta : zeta_i * phi_energy;
  return estimate - (alpha_prev - filter) / lambda;
}

double chi(const LipschitzRate& rate, std::span<const double> xbar, std::span<const double> ybar,
           double t) {
  if (xbar.size() != ybar.size()) throw std::invalid_argument("chi: dimension mismatch");
  double n2 = 0.0;
  for (std::size_t i = 0; i < xbar.size(); ++i) n2 += sq(xbar[i] - ybar[i]);
  return rate(xbar, ybar, t) * std::sqrt(n2);
}

double coupling_term(double coupling, double signal, double gain_upper_prev, double zeta_i) {
  return gain_upper_prev * std::abs(coupling * signal) / zeta_i;
}

double virtual_control_first(const StageGains& g, double gain_lower, const TransformAux& aux,
                             double beta, double chi_1) {
  const double w = aux.z1 * aux.error_gain;
  return saturated_feedback(w, beta, g.delta, gain_lower) +
         saturated_feedback(w, chi_1, g.sigma, gain_lower) - w / gain_lower -
         g.varpi * aux.z1 / (2.0 * gain_lower * aux.error_gain);
}

double virtual_control(const StageGains& g, double gain_lower, double zeta_i, double z, double beta,
                       double chi_i, double gamma, double xi, XiDenominator denom) {
  const double xi_root = (denom == XiDenominator::Gamma) ? gamma : xi;
  const double xi_part =
      -zeta_i * xi * xi / (gain_lower * std::sqrt(sq(zeta_i * xi_root) + sq(g.tau)));
  return saturated_feedback(zeta_i, beta, g.delta, gain_lower) +
         saturated_feedback(zeta_i, chi_i, g.sigma, gain_lower) +
         saturated_feedback(zeta_i, gamma, g.rho, gain_lower) + xi_part -
         g.varpi * (std::atan(z) + g.varrho * std::abs(z)) / (gain_lower * zeta_i) -
         zeta_i / gain_lower;
}

void adaptive_law_derivative(const StageGains& g, std::span<const double> theta,
                             std::span<const double> basis, double drive, std::span<double> out) {
  if (theta.size() != basis.size() || out.size() != theta.size()) {
    throw std::invalid_argument("adaptive_law_derivative: length mismatch");
  }
  for (std::size_t j = 0; j < theta.size(); ++j) {
    out[j] = -g.varpi * theta[j] + g.mu * drive * basis[j];
  }
}

double filter_derivative(double lambda, double filter, double alpha_prev) {
  return (alpha_prev - filter) / lambda;
}

ControlChain::ControlChain(PlantMetadata plant, ReferenceSignal reference,
                           ErrorTransform transform, ControllerConfig config)
    : plant_(std::move(plant)),
      reference_(std::move(reference)),
      transform_(std::move(transform)),
      config_(std::move(config)) {
  const std::size_t n = plant_.order;
  if (n < 2) throw std::invalid_argument("ControlChain: plant order must be at least 2");
  if (config_.gains.size() != n) {
    throw std::invalid_argument("ControlChain: expected " + std::to_string(n) +
                                " stage gain blocks, got " + std::to_string(config_.gains.size()));
  }
  for (std::size_t i = 0; i < n; ++i) config_.gains[i].validate(i);
  if (config_.grids.empty()) config_.grids.push_back(make_reference_grid());
  if (config_.grids.size() != 1 && config_.grids.size() != n) {
    throw std::invalid_argument("ControlChain: provide one grid or one grid per stage");
  }
  if (config_.sign_smoothing < 0) {
    throw std::invalid_argument("ControlChain: sign smoothing must be non-negative");
  }
  if (!reference_.value || !reference_.derivative) {
    throw std::invalid_argument("ControlChain: reference value and derivative are required");
  }
}

const GaussianGrid& ControlChain::grid(std::size_t stage) const {
  return config_.grids.size() == 1 ? config_.grids.front() : config_.grids[stage];
}

StageSignals ControlChain::evaluate(std::span<const double> x, const ControllerState& state,
                                    double t) const {
  const std::size_t n = plant_.order;
  const bool adaptive = config_.mode == ControlMode::Adaptive;
  if (x.size() != n) throw std::invalid_argument("evaluate: state dimension mismatch");
  if (state.filters.size() != n - 1) throw std::invalid_argument("evaluate: filter count");
  if (adaptive && state.theta_hat.size() != n) {
    throw std::invalid_argument("evaluate: adaptive mode needs one weight vector per stage");
  }

  StageSignals sig;
  sig.t = t;
  sig.y_r = reference_.value(t);
  sig.y_r_dot = reference_.derivative(t);
  sig.eta = transform_.perf().eta(t);
  sig.eta_dot = transform_.perf().eta_dot(t);
  sig.z.assign(n, 0.0);
  sig.r.assign(n, 0.0);
  sig.zeta.assign(n, 0.0);
  sig.beta.assign(n, 0.0);
  sig.chi.assign(n, 0.0);
  sig.gamma.assign(n, 0.0);
  sig.xi.assign(n, 0.0);
  sig.alpha.assign(n - 1, 0.0);
  sig.drive.assign(n, 0.0);
  sig.basis.resize(n);

  const std::vector<double> ybar(n, sig.y_r);

  // phi^T theta_hat and phi^T phi at stage k, fed with the repeated reference
  auto regressors = [&](std::size_t k, double& phi_theta, double& phi_energy) {
    const auto& g = grid(k);
    const std::vector<double> input(g.input_dimension(), sig.y_r);
    sig.basis[k] = g.basis(input);
    phi_theta = 0.0;
    phi_energy = 0.0;
    for (std::size_t j = 0; j < sig.basis[k].size(); ++j) {
      const double p = sig.basis[k][j];
      phi_energy += p * p;
      if (adaptive) phi_theta += p * state.theta_hat[k].theta_hat.at(j);
    }
  };

  // stage 1
  sig.transform = transform_.auxiliaries(x[0] - sig.y_r, t);
  const auto& aux = sig.transform;
  sig.z[0] = aux.z1;
  double phi_theta = 0.0;
  double phi_energy = 0.0;
  regressors(0, phi_theta, phi_energy);
  sig.beta[0] = beta_first(config_.mode, aux, phi_theta, phi_energy, sig.y_r_dot, sig.eta_dot);
  sig.chi[0] = chi(plant_.lipschitz[0], x.first(1), std::span(ybar).first(1), t);
  sig.alpha[0] = virtual_control_first(config_.gains[0], plant_.gain_lower[0], aux, sig.beta[0],
                                       sig.chi[0]);
  sig.drive[0] = aux.z1 * aux.error_gain;

  // stages 2..n
  for (std::size_t k = 1; k < n; ++k) {
    const auto& g = config_.gains[k];
    const double s = state.filters[k - 1];
    const double alpha_prev = sig.alpha[k - 1];
    sig.z[k] = x[k] - s;
    sig.r[k] = s - alpha_prev;
    sig.zeta[k] = zeta(sig.z[k], g.varrho, config_.sign_smoothing);
    regressors(k, phi_theta, phi_energy);
    sig.beta[k] = beta_stage(config_.mode, phi_theta, phi_energy, sig.zeta[k], alpha_prev, s,
                             g.lambda);
    sig.chi[k] = chi(plant_.lipschitz[k], x.first(k + 1), std::span(ybar).first(k + 1), t);
    const double coupling = (k == 1) ? aux.z1 * aux.error_gain : sig.zeta[k - 1];
    sig.gamma[k] = coupling_term(coupling, sig.z[k], plant_.gain_upper[k - 1], sig.zeta[k]);
    sig.xi[k] = coupling_term(coupling, sig.r[k], plant_.gain_upper[k - 1], sig.zeta[k]);
    const double v = virtual_control(g, plant_.gain_lower[k], sig.zeta[k], sig.z[k], sig.beta[k],
                                     sig.chi[k], sig.gamma[k], sig.xi[k], config_.xi_denominator);
    if (k + 1 < n) {
      sig.alpha[k] = v;
    } else {
      sig.u = v;
    }
    sig.drive[k] = sig.zeta[k];
  }
  return sig;
}

ControllerState ControlChain::initial_state(std::span<const double> x0) const {
  const std::size_t n = plant_.order;
  ControllerState st;
  st.filters.assign(n - 1, 0.0);
  if (config_.mode == ControlMode::Adaptive) {
    for (std::size_t k = 0; k < n; ++k) {
      st.theta_hat.push_back(AdaptiveWeights::zeros(grid(k).rule_count()));
    }
  }
  // alpha_{k} depends only on s_2..s_{k}, so filling filters in order converges in one sweep
  for (std::size_t k = 1; k < n; ++k) {
    const auto sig = evaluate(x0, st, 0.0);
    st.filters[k - 1] = sig.alpha[k - 1];
  }
  return st;
}

std::vector<std::vector<double>> ControlChain::adaptive_derivatives(
    const StageSignals& sig, const ControllerState& state) const {
  if (config_.mode != ControlMode::Adaptive) {
    throw std::logic_error("adaptive_derivatives: approximator-free mode has no weights");
  }
  std::vector<std::vector<double>> out(plant_.order);
  for (std::size_t k = 0; k < plant_.order; ++k) {
    out[k].resize(state.theta_hat[k].theta_hat.size());
    adaptive_law_derivative(config_.gains[k], state.theta_hat[k].theta_hat, sig.basis[k],
                            sig.drive[k], out[k]);
  }
  return out;
}

double partial_energy(const StageSignals& sig, std::span<const StageGains> gains) {
  double v = 0.5 * sq(sig.z.at(0));
  for (std::size_t k = 1; k < sig.z.size(); ++k) {
    v += std::atan(sig.z[k]) + gains[k].varrho * std::abs(sig.z[k]);
  }
  return v;
}

}  // namespace ptpp
