#include "ptpp/sim.hpp"

#include "ptpp/rk4.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

namespace ptpp {

DivergenceError::DivergenceError(const std::string& what, double time)
    : std::runtime_error(what), time_(time) {}

void SimConfig::validate(std::size_t order, double lambda_min) const {
  if (!(dt > 0)) throw std::invalid_argument("sim: dt must be positive");
  if (!(t_end > 0)) throw std::invalid_argument("sim: t_end must be positive");
  if (record_every == 0) throw std::invalid_argument("sim: record_every must be positive");
  if (x0.size() != order) {
    throw std::invalid_argument("sim: x0 has " + std::to_string(x0.size()) +
                                " entries, plant order is " + std::to_string(order));
  }
  for (double v : x0) {
    if (!std::isfinite(v)) throw std::invalid_argument("sim: x0 must be finite");
  }
  if (!exact_filter && dt > lambda_min / 5.0) {
    std::ostringstream os;
    os << "sim: explicit filter stepping needs dt <= lambda_min/5 = " << lambda_min / 5.0;
    throw std::invalid_argument(os.str());
  }
}

namespace {

double min_lambda(const ControlChain& chain) {
  double m = std::numeric_limits<double>::infinity();
  const auto& gains = chain.config().gains;
  for (std::size_t k = 1; k < gains.size(); ++k) m = std::min(m, gains[k].lambda);
  return m;
}

bool finite_all(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [](double d) { return std::isfinite(d); });
}

bool finite_state(const SimState& s) {
  if (!finite_all(s.x) || !finite_all(s.controller.filters)) return false;
  for (const auto& w : s.controller.theta_hat) {
    if (!finite_all(w.theta_hat)) return false;
  }
  return true;
}

void put_sup(std::map<std::string, double>& sup, const std::string& key, double v) {
  auto& slot = sup[key];
  slot = std::max(slot, std::abs(v));
}

}  // namespace

Simulator::Simulator(StrictFeedbackPlant plant, ControlChain chain, SimConfig config)
    : plant_(std::move(plant)), chain_(std::move(chain)), config_(std::move(config)) {
  if (plant_.order() != chain_.order()) {
    throw std::invalid_argument("Simulator: plant and controller orders differ");
  }
  config_.validate(plant_.order(), min_lambda(chain_));
}

SimState Simulator::initial_state() const {
  SimState s;
  s.t = 0.0;
  s.x = config_.x0;
  s.controller = chain_.initial_state(s.x);
  return s;
}

std::vector<double> Simulator::pack(const SimState& s) const {
  std::vector<double> y(s.x);
  y.insert(y.end(), s.controller.filters.begin(), s.controller.filters.end());
  for (const auto& w : s.controller.theta_hat) {
    y.insert(y.end(), w.theta_hat.begin(), w.theta_hat.end());
  }
  return y;
}

void Simulator::unpack(const std::vector<double>& y, SimState& s) const {
  auto it = y.begin();
  for (auto& v : s.x) v = *it++;
  for (auto& v : s.controller.filters) v = *it++;
  for (auto& w : s.controller.theta_hat) {
    for (auto& v : w.theta_hat) v = *it++;
  }
}

void Simulator::derivative(const SimState& s, double t, std::vector<double>& dy) const {
  if (!finite_state(s)) throw DivergenceError("state became non-finite inside a step", t);
  const auto sig = chain_.evaluate(s.x, s.controller, t);
  if (!std::isfinite(sig.u)) throw DivergenceError("control input became non-finite", t);

  const std::size_t n = plant_.order();
  auto out = dy.begin();
  plant_.state_derivative(s.x, sig.u, t, std::span(&*out, n));
  out += static_cast<std::ptrdiff_t>(n);
  for (std::size_t k = 1; k < n; ++k) {
    *out++ = config_.exact_filter
                 ? 0.0
                 : filter_derivative(chain_.config().gains[k].lambda, s.controller.filters[k - 1],
                                     sig.alpha[k - 1]);
  }
  if (chain_.config().mode == ControlMode::Adaptive) {
    for (std::size_t k = 0; k < n; ++k) {
      const auto& th = s.controller.theta_hat[k].theta_hat;
      adaptive_law_derivative(chain_.config().gains[k], th, sig.basis[k], sig.drive[k],
                              std::span(&*out, th.size()));
      out += static_cast<std::ptrdiff_t>(th.size());
    }
  }
}

void Simulator::step(SimState& state, double dt) const {
  const double t0 = state.t;
  const std::size_t n = plant_.order();
  const auto& gains = chain_.config().gains;

  // exact filter path: s(t0 + h) = alpha + (s(t0) - alpha) exp(-h/lambda) with
  // alpha frozen at its value at t0
  std::vector<double> s0 = state.controller.filters;
  std::vector<double> alpha0;
  if (config_.exact_filter) alpha0 = chain_.evaluate(state.x, state.controller, t0).alpha;
  auto filters_at = [&](double offset, std::vector<double>& s) {
    for (std::size_t k = 1; k < n; ++k) {
      s[k - 1] = alpha0[k - 1] + (s0[k - 1] - alpha0[k - 1]) * std::exp(-offset / gains[k].lambda);
    }
  };

  SimState scratch = state;
  auto f = [&](double t, const std::vector<double>& y, std::vector<double>& dy) {
    unpack(y, scratch);
    if (config_.exact_filter) filters_at(t - t0, scratch.controller.filters);
    derivative(scratch, t, dy);
  };
  const auto y1 = rk4_step(f, t0, pack(state), dt);

  SimState next = state;
  unpack(y1, next);
  if (config_.exact_filter) filters_at(dt, next.controller.filters);
  next.t = t0 + dt;
  if (!finite_state(next)) {
    std::ostringstream os;
    os << "state diverged during step from t=" << t0;
    throw DivergenceError(os.str(), next.t);
  }
  state = std::move(next);
}

SimResult Simulator::run() const {
  SimResult result;
  auto& traj = result.trajectory;
  auto& rep = result.report;
  const std::size_t n = plant_.order();
  const auto& transform = chain_.transform();
  const double T = transform.perf().settling_time();
  const auto [lower, upper] = transform.terminal_bounds();
  rep.steady_bound = upper;

  const auto steps = static_cast<std::size_t>(std::llround(config_.t_end / config_.dt));
  SimState state = initial_state();
  bool transient = true;
  bool steady = true;

  for (std::size_t k = 0;; ++k) {
    const double t = static_cast<double>(k) * config_.dt;
    state.t = t;
    StageSignals sig;
    try {
      sig = chain_.evaluate(state.x, state.controller, t);
    } catch (const FunnelBreach& b) {
      traj.breach = b.time();
      traj.breach_message = b.what();
      rep.breach_time = b.time();
      transient = false;
      steady = false;
      break;
    }

    const double e = sig.transform.e;
    if (!transform.inside(e, t)) transient = false;
    rep.max_abs_error = std::max(rep.max_abs_error, std::abs(e));
    if (t >= T) {
      rep.max_abs_error_after_T = std::max(rep.max_abs_error_after_T, std::abs(e));
      if (!(e > lower && e < upper)) steady = false;
    }
    rep.max_abs_control = std::max(rep.max_abs_control, std::abs(sig.u));

    auto& sup = rep.signal_sup_norms;
    put_sup(sup, "u", sig.u);
    for (std::size_t i = 0; i < n; ++i) {
      const auto idx = std::to_string(i + 1);
      put_sup(sup, "x" + idx, state.x[i]);
      put_sup(sup, "z" + idx, sig.z[i]);
      if (i > 0) {
        put_sup(sup, "s" + idx, state.controller.filters[i - 1]);
        put_sup(sup, "r" + idx, sig.r[i]);
      }
      if (i + 1 < n) put_sup(sup, "alpha" + idx, sig.alpha[i]);
      if (!state.controller.theta_hat.empty()) {
        put_sup(sup, "theta_norm" + idx, state.controller.theta_hat[i].norm());
      }
    }

    if (k % config_.record_every == 0 || k == steps) {
      traj.times.push_back(t);
      traj.states.push_back(state.x);
      traj.filters.push_back(state.controller.filters);
      std::vector<double> norms(n, 0.0);
      for (std::size_t i = 0; i < state.controller.theta_hat.size(); ++i) {
        norms[i] = state.controller.theta_hat[i].norm();
      }
      traj.theta_norms.push_back(std::move(norms));
      traj.eta.push_back(sig.eta);
      traj.signals.push_back(std::move(sig));
    }
    rep.steps = k;
    if (k == steps) break;

    try {
      step(state, config_.dt);
    } catch (const FunnelBreach& b) {
      traj.breach = b.time();
      traj.breach_message = b.what();
      rep.breach_time = b.time();
      transient = false;
      steady = false;
      break;
    }
  }

  rep.transient_ok = transient;
  rep.steady_ok = steady;
  rep.all_finite = std::all_of(rep.signal_sup_norms.begin(), rep.signal_sup_norms.end(),
                               [](const auto& kv) { return std::isfinite(kv.second); });
  return result;
}

ConvergenceResult convergence_check(const StrictFeedbackPlant& plant, const ControlChain& chain,
                                    SimConfig config) {
  const Simulator coarse(plant, chain, config);
  config.dt *= 0.5;
  config.record_every *= 2;
  const Simulator fine(plant, chain, config);
  const auto a = coarse.run();
  const auto b = fine.run();
  if (a.report.breach_time || b.report.breach_time) {
    throw std::runtime_error("convergence_check: a run breached the funnel");
  }
  ConvergenceResult r;
  r.coarse = a.report.max_abs_error;
  r.fine = b.report.max_abs_error;
  r.abs_diff = std::abs(r.coarse - r.fine);
  r.rel_diff = r.fine != 0.0 ? r.abs_diff / std::abs(r.fine) : r.abs_diff;
  return r;
}

std::vector<std::string> trajectory_columns(std::size_t order) {
  std::vector<std::string> cols{"t"};
  for (std::size_t i = 1; i <= order; ++i) cols.push_back("x" + std::to_string(i));
  for (const char* c : {"y_r", "e", "atan_e", "eta", "neg_eta", "u"}) cols.emplace_back(c);
  for (std::size_t i = 2; i <= order; ++i) cols.push_back("s" + std::to_string(i));
  for (std::size_t i = 1; i < order; ++i) cols.push_back("alpha" + std::to_string(i));
  for (std::size_t i = 1; i <= order; ++i) cols.push_back("theta_norm" + std::to_string(i));
  return cols;
}

void write_trajectory(std::ostream& os, const Trajectory& traj, std::size_t order, char delimiter) {
  const auto cols = trajectory_columns(order);
  for (std::size_t i = 0; i < cols.size(); ++i) {
    if (i) os << delimiter;
    os << cols[i];
  }
  os << '\n';
  const auto old_precision = os.precision(12);
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    const auto& sig = traj.signals[k];
    const double e = sig.transform.e;
    os << traj.times[k];
    for (double v : traj.states[k]) os << delimiter << v;
    os << delimiter << sig.y_r << delimiter << e << delimiter << std::atan(e) << delimiter
       << traj.eta[k] << delimiter << -traj.eta[k] << delimiter << sig.u;
    for (double v : traj.filters[k]) os << delimiter << v;
    for (double v : sig.alpha) os << delimiter << v;
    for (double v : traj.theta_norms[k]) os << delimiter << v;
    os << '\n';
  }
  os.precision(old_precision);
}

}  // namespace ptpp
