#pragma once

// Divergence scores between an original network and a twin. Every defined
// score lies in [0, 1]; std::nullopt marks an undefined score.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mltwin/community.hpp"
#include "mltwin/config.hpp"
#include "mltwin/estimators.hpp"
#include "mltwin/network.hpp"

namespace mltwin {

/// Detection output and derived statistics of one network, computed once and
/// reused for every comparison it takes part in.
struct NetworkSummary {
  std::vector<LayerPartition> partitions;
  ObservedMatrices matrices;
  std::vector<double> xi;  // detected, clamped like the estimator
};

NetworkSummary summarize(const MultilayerNetwork& net, unsigned jobs = 1);

/// sqrt(mean over i<j of (a_ij - b_ij)^2), pairs undefined on either side skipped.
std::optional<double> d_edge_correlation(const CorrelationMatrix& a, const CorrelationMatrix& b);
/// As d_edge_correlation with the squared differences divided by 4.
std::optional<double> d_tau(const CorrelationMatrix& a, const CorrelationMatrix& b);
std::optional<double> d_r(const CorrelationMatrix& a, const CorrelationMatrix& b);

struct TailScore {
  std::optional<double> score;            // mean over scored layers
  std::vector<std::optional<double>> layers;
  std::vector<std::string> warnings;
};

/// max_k |N(k)/N(min) - (k/min)^(1-exponent)| for k in [min, max], where N(k)
/// counts values >= k. std::nullopt when no value reaches `min`.
std::optional<double> tail_distance(std::span<const std::uint32_t> values, std::uint32_t min, std::uint32_t max,
                                    double exponent);

/// Degree tails of `net` against the configured laws.
TailScore d_gamma(const MultilayerNetwork& net, const MabcdConfig& config);
/// Community-size tails against the configured laws; single-community layers skipped.
TailScore d_beta(std::span<const LayerPartition> partitions, const MabcdConfig& config);
/// sqrt(mean_i (a_i - b_i)^2).
double d_xi(std::span<const double> a, std::span<const double> b);

struct PairBreakdown {
  std::size_t i = 0, j = 0;
  std::optional<double> original_R, twin_R;
  std::optional<double> original_tau, twin_tau;
  std::optional<double> original_r, twin_r;
};

struct DivergenceReport {
  std::optional<double> D_R, D_tau, D_r, D_gamma, D_beta, D_xi;
  std::vector<PairBreakdown> pairs;
  std::vector<std::optional<double>> gamma_layers, beta_layers;
  std::vector<double> xi_original, xi_twin;
  std::vector<std::string> warnings;
};

DivergenceReport full_report(const MultilayerNetwork& original, const NetworkSummary& original_summary,
                             const NetworkSummary& twin_summary, const MabcdConfig& config);
/// Convenience overload that runs detection on both networks.
DivergenceReport full_report(const MultilayerNetwork& original, const MultilayerNetwork& twin,
                             const MabcdConfig& config);

std::string report_to_json(const DivergenceReport& report, int indent = 2);

/// "label,D_R,D_tau,D_r,D_gamma,D_beta,D_xi"
std::string report_csv_header();
std::string report_csv_row(const std::string& label, const DivergenceReport& report);
/// Column means over the defined values of each score.
DivergenceReport mean_report(std::span<const DivergenceReport> reports);

}  // namespace mltwin
