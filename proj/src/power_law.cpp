#include "mltwin/power_law.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mltwin {

TruncatedPowerLaw::TruncatedPowerLaw(std::uint32_t min, std::uint32_t max, double exponent)
    : min_(min), max_(max), exponent_(exponent) {
  if (min < 1 || max < min) throw std::invalid_argument("power law support must satisfy 1 <= min <= max");
  cumulative_.resize(max - min + 1);
  double acc = 0.0;
  for (std::uint32_t k = min; k <= max; ++k) {
    acc += std::pow(static_cast<double>(k), -exponent);
    cumulative_[k - min] = acc;
  }
  for (double& c : cumulative_) c /= acc;
  cumulative_.back() = 1.0;
}

double TruncatedPowerLaw::pmf(std::uint32_t k) const {
  if (k < min_ || k > max_) return 0.0;
  const double below = k == min_ ? 0.0 : cumulative_[k - min_ - 1];
  return cumulative_[k - min_] - below;
}

double TruncatedPowerLaw::cdf(std::uint32_t k) const {
  if (k < min_) return 0.0;
  if (k >= max_) return 1.0;
  return cumulative_[k - min_];
}

std::uint32_t TruncatedPowerLaw::sample(Rng& rng) const {
  const double u = rng.uniform();
  auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
  if (it == cumulative_.end()) --it;
  return min_ + static_cast<std::uint32_t>(it - cumulative_.begin());
}

double TruncatedPowerLaw::mean_log_likelihood(std::span<const std::uint32_t> samples, std::uint32_t min,
                                              std::uint32_t max, double exponent) {
  double norm = 0.0;
  for (std::uint32_t k = min; k <= max; ++k) norm += std::pow(static_cast<double>(k), -exponent);
  double sum_log = 0.0;
  for (auto x : samples) sum_log += std::log(static_cast<double>(x));
  const double count = static_cast<double>(samples.size());
  return -exponent * sum_log / count - std::log(norm);
}

}  // namespace mltwin
