#pragma once

// Generator configuration: the global and per-layer mABCD parameters.
//
// On disk this is a JSON document:
//
//   {
//     "n": 3000, "l": 2, "d": 2, "seed": 7,
//     "R": [1, 0.3, 0.3, 1],                      // row-major l x l
//     "layers": [
//       {"q": 1.0, "tau": 0.5, "r": 0.8, "gamma": 2.5, "delta": 5,
//        "Delta": 60, "beta": 1.5, "s": 20, "S": 150, "xi": 0.2},
//       ...
//     ]
//   }
//
// "d" and every "r" may be null (unset) in configurations produced by
// extraction; generation requires them.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mltwin/network.hpp"

namespace mltwin {

struct LayerParams {
  double q = 1.0;              // fraction of active actors, (0, 1]
  double tau = 0.0;            // label-degree correlation, [-1, 1]
  std::optional<double> r;     // community-reference correlation, [0, 1]
  double gamma = 2.5;          // degree exponent, (2, 3)
  std::uint32_t delta = 1;     // min degree
  std::uint32_t Delta = 1;     // max degree, delta <= Delta < n
  double beta = 1.5;           // community-size exponent, (1, 2)
  std::uint32_t s = 2;         // min community size, delta < s
  std::uint32_t S = 2;         // max community size, s <= S <= n
  double xi = 0.2;             // noise level, (0, 1)

  bool operator==(const LayerParams&) const = default;
};

struct MabcdConfig {
  std::size_t n = 1;
  std::optional<std::size_t> d;
  std::uint64_t seed = 0;
  /// Target inter-layer edge correlation, row-major l x l.
  std::vector<double> R;
  std::vector<LayerParams> layers;

  std::size_t layer_count() const { return layers.size(); }
  double correlation(std::size_t i, std::size_t j) const { return R.at(i * layers.size() + j); }

  bool operator==(const MabcdConfig&) const = default;
};

class ConfigError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

enum class Completeness {
  /// r and d may be unset (extraction output).
  kPartial,
  /// Everything must be set (generator input).
  kComplete,
};

/// Throws ConfigError naming the first violated range constraint.
void validate(const MabcdConfig& config, Completeness completeness = Completeness::kComplete);

/// R filled with ones on the diagonal and `off_diagonal` elsewhere.
std::vector<double> uniform_correlation(std::size_t layers, double off_diagonal);

std::string config_to_json(const MabcdConfig& config, int indent = 2);
/// Parses and validates with the given completeness.
MabcdConfig config_from_json(const std::string& text, Completeness completeness = Completeness::kPartial);
MabcdConfig load_config(const std::filesystem::path& path, Completeness completeness = Completeness::kPartial);
void save_config(const std::filesystem::path& path, const MabcdConfig& config);

/// ⌊x·n⌉ with ties to even, at least 1.
std::size_t active_target(double q, std::size_t n);

}  // namespace mltwin
