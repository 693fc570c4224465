#pragma once

// Prescribed-time performance envelope and the tangent error transformation.

#include <stdexcept>
#include <string>
#include <utility>

namespace ptpp {

inline constexpr double kHalfPi = 1.57079632679489661923;
inline constexpr double kPi = 3.14159265358979323846;

/// Thrown when a tracking error leaves the funnel of the active transform.
class FunnelBreach : public std::runtime_error {
 public:
  FunnelBreach(double error, double time, double envelope);

  double error() const { return error_; }
  double time() const { return time_; }
  double envelope() const { return envelope_; }

 private:
  double error_;
  double time_;
  double envelope_;
};

/**
 * Envelope eta(t) = a*exp(-b*(T/(T-t))^h) + c for t < T, and c afterwards.
 *
 * Construction enforces a*exp(-b) + c = pi/2 so that the transform is the
 * identity at t = 0 for every initial error.
 */
class PerfFunction {
 public:
  /// Validates positivity and the eta(0) = pi/2 constraint (1e-9).
  PerfFunction(double a, double b, double c, double h, double settling_time);

  double a() const { return a_; }
  double b() const { return b_; }
  double c() const { return c_; }
  double h() const { return h_; }
  double settling_time() const { return T_; }

  double eta(double t) const;
  double eta_dot(double t) const;

 private:
  // true when t is at or past T, including the 1e-12*T band below it
  bool settled(double t) const;

  double a_, b_, c_, h_, T_;
};

/// Derives a = (pi/2 - c)*e^b. Throws std::invalid_argument unless 0 < c < pi/2.
PerfFunction perf_from_terminal(double b, double c, double h, double settling_time);

enum class TransformKind {
  SymmetricTan,
  // tan branch for e >= 0, arctanh branch for e < 0
  AsymmetricTanUpper,
  // arctanh branch for e >= 0, tan branch for e < 0
  AsymmetricTanLower,
};

std::string to_string(TransformKind kind);
TransformKind transform_kind_from_string(const std::string& name);

/// Quantities the controller needs from the transform at one instant.
struct TransformAux {
  double e = 0.0;
  double z1 = 0.0;
  double psi = 1.0;
  double varphi = 1.0;
  /// dz1/de; equals varphi*psi on the tangent branch.
  double error_gain = 1.0;
  /// (dz1/d eta) / (dz1/de); equals -(2/pi)*atan(z1)/varphi on the tangent branch.
  double eta_ratio = 0.0;
};

class ErrorTransform {
 public:
  explicit ErrorTransform(PerfFunction perf,
                          TransformKind kind = TransformKind::SymmetricTan,
                          double phi_floor = 1e-12);

  const PerfFunction& perf() const { return perf_; }
  TransformKind kind() const { return kind_; }
  double phi_floor() const { return phi_floor_; }

  /// e -> z1. Throws FunnelBreach outside the funnel.
  double transform(double e, double t) const;
  /// z1 -> e. Total on finite z1 for the symmetric kind; the arctanh branch
  /// throws std::domain_error when z1 has no preimage.
  double inverse_transform(double z1, double t) const;

  /// pi*(1 + z1^2) / (2*eta(t))
  double psi(double z1, double t) const;
  /// max(cos^2((2/pi)*eta(t)*atan(z1)), phi_floor)
  double varphi(double z1, double t) const;

  /// Transform plus derivative information. Throws FunnelBreach.
  TransformAux auxiliaries(double e, double t) const;

  /// Domain test for the active transform.
  bool inside(double e, double t) const;

  /// Limits (lower, upper) that e stays strictly within once eta(t) = c:
  /// tan(c) on a tangent side, atanh(pi*c/2) on an arctanh side.
  std::pair<double, double> terminal_bounds() const;

 private:
  bool tan_branch(double e) const;

  PerfFunction perf_;
  TransformKind kind_;
  double phi_floor_;
};

}  // namespace ptpp
