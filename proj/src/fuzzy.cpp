#include "ptpp/fuzzy.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace ptpp {

GaussianGrid::GaussianGrid(std::vector<GaussianRule> rules) : rules_(std::move(rules)) {
  if (rules_.empty()) throw std::invalid_argument("GaussianGrid: at least one rule required");
  dim_ = rules_.front().centers.size();
  if (dim_ == 0) throw std::invalid_argument("GaussianGrid: rules need at least one input");
  for (const auto& r : rules_) {
    if (r.centers.size() != dim_) {
      throw std::invalid_argument("GaussianGrid: all rules must share the input dimension");
    }
    if (!(r.width > 0) || !(r.amplitude > 0)) {
      throw std::invalid_argument("GaussianGrid: widths and amplitudes must be positive");
    }
  }
}

void GaussianGrid::check_input(std::span<const double> input) const {
  if (input.size() != dim_) {
    throw std::invalid_argument("GaussianGrid: input dimension " + std::to_string(input.size()) +
                                " does not match grid dimension " + std::to_string(dim_));
  }
}

void GaussianGrid::basis(std::span<const double> input, std::span<double> out) const {
  check_input(input);
  if (out.size() != rules_.size()) throw std::invalid_argument("GaussianGrid: output size");

  double total = 0.0;
  for (std::size_t j = 0; j < rules_.size(); ++j) {
    const auto& r = rules_[j];
    double activation = 1.0;
    for (std::size_t i = 0; i < dim_; ++i) {
      const double d = (input[i] - r.centers[i]) / r.width;
      activation *= r.amplitude * std::exp(-0.5 * d * d);
    }
    out[j] = activation;
    total += activation;
  }

  if (total > 0.0 && std::isfinite(total)) {
    for (auto& v : out) v /= total;
    return;
  }

  // every activation underflowed: fall back to the nearest center
  std::size_t nearest = 0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < rules_.size(); ++j) {
    double dist = 0.0;
    for (std::size_t i = 0; i < dim_; ++i) {
      const double d = (input[i] - rules_[j].centers[i]) / rules_[j].width;
      dist += d * d;
    }
    if (dist < best) {
      best = dist;
      nearest = j;
    }
  }
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = (j == nearest) ? 1.0 : 0.0;
}

std::vector<double> GaussianGrid::basis(std::span<const double> input) const {
  std::vector<double> out(rules_.size());
  basis(input, out);
  return out;
}

GaussianGrid make_reference_grid() {
  std::vector<GaussianRule> rules;
  rules.reserve(11);
  // 10*exp(-(y - v)^2/10) == 10*exp(-0.5*((y - v)/sqrt(5))^2)
  const double width = std::sqrt(5.0);
  for (int k = -5; k <= 5; ++k) {
    rules.push_back(GaussianRule{{4.0 * k}, width, 10.0});
  }
  return GaussianGrid(std::move(rules));
}

double AdaptiveWeights::norm() const {
  double s = 0.0;
  for (double v : theta_hat) s += v * v;
  return std::sqrt(s);
}

double approximate(const GaussianGrid& grid, const AdaptiveWeights& w,
                   std::span<const double> input) {
  if (w.theta_hat.size() != grid.rule_count()) {
    throw std::invalid_argument("approximate: weight length does not match rule count");
  }
  const auto phi = grid.basis(input);
  double acc = 0.0;
  for (std::size_t j = 0; j < phi.size(); ++j) acc += phi[j] * w.theta_hat[j];
  return acc;
}

double regressor_energy(const GaussianGrid& grid, std::span<const double> input) {
  const auto phi = grid.basis(input);
  double acc = 0.0;
  for (double v : phi) acc += v * v;
  return acc;
}

}  // namespace ptpp
