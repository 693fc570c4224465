#include "ptpp/perf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace ptpp {

namespace {

constexpr double kTwoOverPi = 2.0 / kPi;

std::string breach_message(double error, double time, double envelope) {
  std::ostringstream os;
  os << "funnel breach at t=" << time << ": e=" << error << ", eta=" << envelope;
  return os.str();
}

}  // namespace

FunnelBreach::FunnelBreach(double error, double time, double envelope)
    : std::runtime_error(breach_message(error, time, envelope)),
      error_(error),
      time_(time),
      envelope_(envelope) {}

PerfFunction::PerfFunction(double a, double b, double c, double h, double settling_time)
    : a_(a), b_(b), c_(c), h_(h), T_(settling_time) {
  if (!(a > 0 && b > 0 && c > 0 && h > 0 && settling_time > 0)) {
    throw std::invalid_argument("PerfFunction: a, b, c, h and T must be strictly positive");
  }
  const double eta0 = a * std::exp(-b) + c;
  if (std::abs(eta0 - kHalfPi) > 1e-9) {
    std::ostringstream os;
    os << "PerfFunction: a*exp(-b) + c = " << eta0 << " must equal pi/2";
    throw std::invalid_argument(os.str());
  }
}

bool PerfFunction::settled(double t) const { return T_ - t < 1e-12 * T_; }

double PerfFunction::eta(double t) const {
  if (settled(t)) return c_;
  const double q = T_ / (T_ - t);
  return a_ * std::exp(-b_ * std::pow(q, h_)) + c_;
}

double PerfFunction::eta_dot(double t) const {
  if (settled(t)) return 0.0;
  const double gap = T_ - t;
  const double qh = std::pow(T_ / gap, h_);
  const double decay = std::exp(-b_ * qh);
  if (decay == 0.0) return 0.0;
  // a*b*h*T^h/(T-t)^(h+1) written as a*b*h*q^h/(T-t) to stay finite near T
  return -a_ * b_ * h_ * qh / gap * decay;
}

PerfFunction perf_from_terminal(double b, double c, double h, double settling_time) {
  if (!(c > 0 && c < kHalfPi)) {
    throw std::invalid_argument("perf_from_terminal: terminal accuracy c must lie in (0, pi/2)");
  }
  if (!(b > 0)) throw std::invalid_argument("perf_from_terminal: b must be positive");
  const double a = (kHalfPi - c) * std::exp(b);
  return PerfFunction(a, b, c, h, settling_time);
}

std::string to_string(TransformKind kind) {
  switch (kind) {
    case TransformKind::SymmetricTan:
      return "symmetric";
    case TransformKind::AsymmetricTanUpper:
      return "asymmetric-upper";
    case TransformKind::AsymmetricTanLower:
      return "asymmetric-lower";
  }
  return "unknown";
}

TransformKind transform_kind_from_string(const std::string& name) {
  if (name == "symmetric") return TransformKind::SymmetricTan;
  if (name == "asymmetric-upper") return TransformKind::AsymmetricTanUpper;
  if (name == "asymmetric-lower") return TransformKind::AsymmetricTanLower;
  throw std::invalid_argument("unknown transform kind '" + name + "'");
}

ErrorTransform::ErrorTransform(PerfFunction perf, TransformKind kind, double phi_floor)
    : perf_(perf), kind_(kind), phi_floor_(phi_floor) {
  if (!(phi_floor > 0 && phi_floor < 1)) {
    throw std::invalid_argument("ErrorTransform: phi floor must lie in (0, 1)");
  }
}

bool ErrorTransform::tan_branch(double e) const {
  switch (kind_) {
    case TransformKind::SymmetricTan:
      return true;
    case TransformKind::AsymmetricTanUpper:
      return e >= 0.0;
    case TransformKind::AsymmetricTanLower:
      return e < 0.0;
  }
  return true;
}

bool ErrorTransform::inside(double e, double t) const {
  if (!std::isfinite(e)) return false;
  const double eta = perf_.eta(t);
  if (tan_branch(e)) return std::abs(std::atan(e)) < eta;
  return std::abs(kTwoOverPi * std::tanh(e) / eta) < 1.0;
}

double ErrorTransform::transform(double e, double t) const {
  const double eta = perf_.eta(t);
  if (!inside(e, t)) throw FunnelBreach(e, t, eta);
  if (tan_branch(e)) return std::tan(kHalfPi * std::atan(e) / eta);
  return std::atanh(kTwoOverPi * std::tanh(e) / eta);
}

double ErrorTransform::inverse_transform(double z1, double t) const {
  const double eta = perf_.eta(t);
  // z1 carries the sign of e on every branch
  if (tan_branch(z1)) return std::tan(kTwoOverPi * eta * std::atan(z1));
  const double w = kHalfPi * eta * std::tanh(z1);
  if (!(std::abs(w) < 1.0)) {
    throw std::domain_error("inverse_transform: z1 outside the arctanh branch range");
  }
  return std::atanh(w);
}

std::pair<double, double> ErrorTransform::terminal_bounds() const {
  const double c = perf_.c();
  const double tan_side = std::tan(c);
  const double atanh_side = (kHalfPi * c < 1.0) ? std::atanh(kHalfPi * c)
                                                : std::numeric_limits<double>::infinity();
  const double upper = tan_branch(1.0) ? tan_side : atanh_side;
  const double lower = tan_branch(-1.0) ? tan_side : atanh_side;
  return {-lower, upper};
}

double ErrorTransform::psi(double z1, double t) const {
  return kPi * (1.0 + z1 * z1) / (2.0 * perf_.eta(t));
}

double ErrorTransform::varphi(double z1, double t) const {
  const double c = std::cos(kTwoOverPi * perf_.eta(t) * std::atan(z1));
  return std::max(c * c, phi_floor_);
}

TransformAux ErrorTransform::auxiliaries(double e, double t) const {
  TransformAux aux;
  aux.e = e;
  aux.z1 = transform(e, t);
  aux.psi = psi(aux.z1, t);
  aux.varphi = varphi(aux.z1, t);
  if (tan_branch(e)) {
    aux.error_gain = aux.varphi * aux.psi;
    aux.eta_ratio = -kTwoOverPi * std::atan(aux.z1) / aux.varphi;
  } else {
    const double eta = perf_.eta(t);
    const double w = kTwoOverPi * std::tanh(e) / eta;
    const double sech = 1.0 / std::cosh(e);
    aux.error_gain = kTwoOverPi * sech * sech / (eta * (1.0 - w * w));
    aux.eta_ratio = -std::tanh(e) / (eta * sech * sech);
  }
  return aux;
}

}  // namespace ptpp
