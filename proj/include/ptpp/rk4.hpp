#pragma once

#include <cstddef>
#include <vector>

namespace ptpp {

/// Classical fourth-order Runge-Kutta step for y' = f(t, y).
/// `f(t, y, dy)` writes the derivative of `y` into `dy` (same length).
template <class Derivative>
std::vector<double> rk4_step(Derivative&& f, double t, const std::vector<double>& y, double dt) {
  const std::size_t n = y.size();
  std::vector<double> k1(n), k2(n), k3(n), k4(n), tmp(n);
  const double half = 0.5 * dt;

  f(t, y, k1);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + half * k1[i];
  f(t + half, tmp, k2);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + half * k2[i];
  f(t + half, tmp, k3);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + dt * k3[i];
  f(t + dt, tmp, k4);

  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = y[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  }
  return out;
}

}  // namespace ptpp
