#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mltwin/rng.hpp"

namespace mltwin {

/// Discrete power law P(k) ∝ k^-exponent on the integers [min, max].
class TruncatedPowerLaw {
 public:
  TruncatedPowerLaw(std::uint32_t min, std::uint32_t max, double exponent);

  std::uint32_t min() const { return min_; }
  std::uint32_t max() const { return max_; }
  double exponent() const { return exponent_; }

  double pmf(std::uint32_t k) const;
  /// P(X <= k).
  double cdf(std::uint32_t k) const;
  /// Inverse-CDF draw.
  std::uint32_t sample(Rng& rng) const;

  /// Mean log-likelihood of `samples` (all within [min, max]).
  static double mean_log_likelihood(std::span<const std::uint32_t> samples, std::uint32_t min,
                                    std::uint32_t max, double exponent);

 private:
  std::uint32_t min_, max_;
  double exponent_;
  std::vector<double> cumulative_;  // cumulative_[k - min] = P(X <= k)
};

}  // namespace mltwin
