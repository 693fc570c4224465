#pragma once

// Gaussian fuzzy logic systems: product inference, singleton fuzzifier,
// center-average defuzzification.

#include <cstddef>
#include <span>
#include <vector>

namespace ptpp {

/// One fuzzy rule: per-input Gaussian a*exp(-0.5*((x - center)/width)^2).
struct GaussianRule {
  std::vector<double> centers;
  double width = 1.0;
  double amplitude = 1.0;
};

class GaussianGrid {
 public:
  explicit GaussianGrid(std::vector<GaussianRule> rules);

  std::size_t rule_count() const { return rules_.size(); }
  std::size_t input_dimension() const { return dim_; }
  const std::vector<GaussianRule>& rules() const { return rules_; }

  /// Normalized basis phi(input). Writes rule_count() values into `out`.
  void basis(std::span<const double> input, std::span<double> out) const;
  std::vector<double> basis(std::span<const double> input) const;

 private:
  void check_input(std::span<const double> input) const;

  std::vector<GaussianRule> rules_;
  std::size_t dim_;
};

/// The 11-rule scalar grid used by both case studies:
/// mu_j(y) = 10*exp(-(y - v_j)^2/10), v = -20, -16, ..., 16, 20.
GaussianGrid make_reference_grid();

/// Online estimate theta_hat of one stage's fuzzy weights.
struct AdaptiveWeights {
  std::vector<double> theta_hat;

  static AdaptiveWeights zeros(std::size_t m) { return {std::vector<double>(m, 0.0)}; }
  double norm() const;
};

/// phi(input)^T theta_hat
double approximate(const GaussianGrid& grid, const AdaptiveWeights& w,
                   std::span<const double> input);

/// phi(input)^T phi(input), in [1/m, 1]
double regressor_energy(const GaussianGrid& grid, std::span<const double> input);

}  // namespace ptpp
