#pragma once

// Configuration retrieval: estimates every generator parameter except r and d
// from an observed network.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mltwin/community.hpp"
#include "mltwin/config.hpp"
#include "mltwin/network.hpp"

namespace mltwin {

class EstimationError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Search interval of the exponent MLE.
inline constexpr double kExponentLow = 1.01;
inline constexpr double kExponentHigh = 6.0;

struct PowerLawFit {
  double exponent = 0.0;
  /// max_k |F_empirical(k) - F_fitted(k)| over the support.
  double ks = 0.0;
  /// The optimum sits at an end of the search interval.
  bool pinned = false;
};

/// Discrete power law on [min, max] with min fixed; exponent by golden-section
/// search of the likelihood. Throws EstimationError with fewer than 10
/// samples, all samples equal, or a sample outside the support.
PowerLawFit fit_power_law(std::span<const std::uint32_t> samples, std::uint32_t min, std::uint32_t max);

struct TrivialParams {
  std::size_t n = 0;
  std::size_t l = 0;
  std::vector<std::uint32_t> delta, Delta;
  std::vector<double> q;
};

/// n, l, min/max positive degree and q_i = |V_i| / |∪ V_j|.
TrivialParams extract_trivial(const MultilayerNetwork& net);

struct TauEstimate {
  std::vector<double> tau;
  /// Label in [1, n] of every actor (ascending total degree, seeded tie-breaks).
  std::vector<std::uint32_t> labels;
  std::vector<std::string> warnings;
};

TauEstimate estimate_tau(const MultilayerNetwork& net, std::uint64_t seed);

struct DegreeEstimate {
  PowerLawFit fit;
  double gamma = 2.5;  // clamped
  std::vector<std::string> warnings;
};

DegreeEstimate estimate_degree_params(const Layer& layer, std::size_t index);

struct CommunityEstimate {
  std::uint32_t s = 0, S = 0;
  double beta = 1.5;  // clamped or fallback
  std::optional<PowerLawFit> fit;
  std::vector<std::string> warnings;
};

CommunityEstimate estimate_community_params(const LayerPartition& partition, std::size_t index);

/// Fraction of edges crossing communities, clamped to [0.001, 0.999].
/// Throws EstimationError on an edgeless layer.
double estimate_xi(const Layer& layer, const LayerPartition& partition);
/// The same fraction without clamping.
double crossing_fraction(const Layer& layer, const LayerPartition& partition);

struct ObservedMatrices {
  CorrelationMatrix R;    // edge correlation
  CorrelationMatrix tau;  // Kendall tau-b of degrees on common actors
  CorrelationMatrix r;    // AMI of induced partitions, clamped at 0
};

ObservedMatrices observed_matrices(const MultilayerNetwork& net, std::span<const LayerPartition> partitions);

/// Kendall tau-b between the degrees of two layers on V_i ∩ V_j.
std::optional<double> layer_degree_tau(const MultilayerNetwork& net, std::size_t i, std::size_t j);
/// AMI of two partitions restricted to their common domain, clamped at 0.
std::optional<double> induced_ami(const LayerPartition& a, const LayerPartition& b);

struct LayerExtraction {
  PowerLawFit degree_fit;
  std::optional<PowerLawFit> size_fit;
  double xi_raw = 0.0;
  double modularity = 0.0;
  std::size_t communities = 0;
};

struct ExtractionResult {
  /// r and d unset; R = observed edge correlation (undefined entries as 0).
  MabcdConfig config;
  std::vector<LayerPartition> partitions;
  std::vector<LayerExtraction> layers;
  ObservedMatrices observed;
  std::uint64_t seed = 0;
  std::vector<std::string> warnings;
};

/// Runs detection once per layer and every estimator on top of it.
ExtractionResult extract(const MultilayerNetwork& net, std::uint64_t seed, unsigned jobs = 1);

/// Config schema plus a "diagnostics" object; loadable by load_config.
std::string extraction_to_json(const ExtractionResult& result, int indent = 2);
void save_extraction(const std::filesystem::path& path, const ExtractionResult& result);

}  // namespace mltwin
