#include "mltwin/divergence.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "mltwin/parallel.hpp"
#include "mltwin/text.hpp"

namespace mltwin {

NetworkSummary summarize(const MultilayerNetwork& net, unsigned jobs) {
  const std::size_t l = net.layer_count();
  NetworkSummary out;
  out.partitions.resize(l);
  parallel_for(l, jobs, [&](std::size_t i) { out.partitions[i] = greedy_modularity(net.layer(i)).partition; });
  out.matrices = observed_matrices(net, out.partitions);
  for (std::size_t i = 0; i < l; ++i) out.xi.push_back(estimate_xi(net.layer(i), out.partitions[i]));
  return out;
}

namespace {

std::optional<double> matrix_rms(const CorrelationMatrix& a, const CorrelationMatrix& b, double scale) {
  if (a.size() != b.size()) throw std::invalid_argument("divergence: matrices differ in size");
  double sum = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = i + 1; j < a.size(); ++j) {
      const auto x = a.at(i, j);
      const auto y = b.at(i, j);
      if (!x || !y) continue;
      sum += (*x - *y) * (*x - *y);
      ++pairs;
    }
  }
  if (pairs == 0) return std::nullopt;
  return std::sqrt(sum / (scale * static_cast<double>(pairs)));
}

TailScore average_tails(std::vector<std::optional<double>> layers, std::vector<std::string> warnings) {
  TailScore out;
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& v : layers) {
    if (v) {
      sum += *v;
      ++count;
    }
  }
  if (count > 0) out.score = sum / static_cast<double>(count);
  out.layers = std::move(layers);
  out.warnings = std::move(warnings);
  return out;
}

}  // namespace

std::optional<double> d_edge_correlation(const CorrelationMatrix& a, const CorrelationMatrix& b) {
  return matrix_rms(a, b, 1.0);
}

std::optional<double> d_tau(const CorrelationMatrix& a, const CorrelationMatrix& b) { return matrix_rms(a, b, 4.0); }

std::optional<double> d_r(const CorrelationMatrix& a, const CorrelationMatrix& b) { return matrix_rms(a, b, 1.0); }

std::optional<double> tail_distance(std::span<const std::uint32_t> values, std::uint32_t min, std::uint32_t max,
                                    double exponent) {
  if (min < 1 || max < min) throw std::invalid_argument("tail_distance: invalid support");
  // at_least[k - min] = number of values >= k, for k in [min, max + 1].
  std::vector<std::size_t> at_least(static_cast<std::size_t>(max - min) + 2, 0);
  for (auto v : values) {
    if (v >= min) ++at_least[std::min(v, max + 1) - min];
  }
  for (std::size_t k = at_least.size() - 1; k-- > 0;) at_least[k] += at_least[k + 1];
  if (at_least[0] == 0) return std::nullopt;
  const double base = static_cast<double>(at_least[0]);
  double worst = 0.0;
  for (std::uint32_t k = min; k <= max; ++k) {
    const double empirical = static_cast<double>(at_least[k - min]) / base;
    const double theory = std::pow(static_cast<double>(k) / static_cast<double>(min), 1.0 - exponent);
    worst = std::max(worst, std::abs(empirical - theory));
  }
  return worst;
}

TailScore d_gamma(const MultilayerNetwork& net, const MabcdConfig& config) {
  if (config.layer_count() != net.layer_count()) throw std::invalid_argument("d_gamma: layer count mismatch");
  std::vector<std::optional<double>> layers;
  std::vector<std::string> warnings;
  for (std::size_t i = 0; i < net.layer_count(); ++i) {
    const LayerParams& p = config.layers[i];
    auto v = tail_distance(net.layer(i).degrees(), p.delta, p.Delta, p.gamma);
    if (!v) warnings.push_back("layer " + std::to_string(i + 1) + ": no degree reaches delta; skipped in D_gamma");
    layers.push_back(v);
  }
  return average_tails(std::move(layers), std::move(warnings));
}

TailScore d_beta(std::span<const LayerPartition> partitions, const MabcdConfig& config) {
  if (config.layer_count() != partitions.size()) throw std::invalid_argument("d_beta: layer count mismatch");
  std::vector<std::optional<double>> layers;
  std::vector<std::string> warnings;
  for (std::size_t i = 0; i < partitions.size(); ++i) {
    const LayerParams& p = config.layers[i];
    const auto sizes = partitions[i].community_sizes();
    std::optional<double> v;
    if (sizes.size() < 2) {
      warnings.push_back("layer " + std::to_string(i + 1) + ": single community; skipped in D_beta");
    } else {
      const std::vector<std::uint32_t> values(sizes.begin(), sizes.end());
      v = tail_distance(values, p.s, p.S, p.beta);
      if (!v) warnings.push_back("layer " + std::to_string(i + 1) + ": no community reaches s; skipped in D_beta");
    }
    layers.push_back(v);
  }
  return average_tails(std::move(layers), std::move(warnings));
}

double d_xi(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.empty()) throw std::invalid_argument("d_xi: vectors must be non-empty and equal length");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(sum / static_cast<double>(a.size()));
}

DivergenceReport full_report(const MultilayerNetwork& original, const NetworkSummary& g, const NetworkSummary& twin,
                             const MabcdConfig& config) {
  DivergenceReport out;
  out.D_R = d_edge_correlation(g.matrices.R, twin.matrices.R);
  out.D_tau = d_tau(g.matrices.tau, twin.matrices.tau);
  out.D_r = d_r(g.matrices.r, twin.matrices.r);
  auto gamma = d_gamma(original, config);
  auto beta = d_beta(g.partitions, config);
  out.D_gamma = gamma.score;
  out.D_beta = beta.score;
  out.gamma_layers = std::move(gamma.layers);
  out.beta_layers = std::move(beta.layers);
  out.warnings = std::move(gamma.warnings);
  out.warnings.insert(out.warnings.end(), beta.warnings.begin(), beta.warnings.end());
  out.xi_original = g.xi;
  out.xi_twin = twin.xi;
  out.D_xi = d_xi(g.xi, twin.xi);
  const std::size_t l = g.matrices.R.size();
  for (std::size_t i = 0; i < l; ++i) {
    for (std::size_t j = i + 1; j < l; ++j) {
      out.pairs.push_back({i, j, g.matrices.R.at(i, j), twin.matrices.R.at(i, j), g.matrices.tau.at(i, j),
                           twin.matrices.tau.at(i, j), g.matrices.r.at(i, j), twin.matrices.r.at(i, j)});
    }
  }
  return out;
}

DivergenceReport full_report(const MultilayerNetwork& original, const MultilayerNetwork& twin,
                             const MabcdConfig& config) {
  if (original.layer_count() != twin.layer_count()) throw ValidationError("twin and original differ in layer count");
  return full_report(original, summarize(original), summarize(twin), config);
}

namespace {

nlohmann::ordered_json optional_json(const std::optional<double>& x) {
  return x ? nlohmann::ordered_json(*x) : nlohmann::ordered_json(nullptr);
}

}  // namespace

std::string report_to_json(const DivergenceReport& r, int indent) {
  nlohmann::ordered_json doc;
  doc["D_R"] = optional_json(r.D_R);
  doc["D_tau"] = optional_json(r.D_tau);
  doc["D_r"] = optional_json(r.D_r);
  doc["D_gamma"] = optional_json(r.D_gamma);
  doc["D_beta"] = optional_json(r.D_beta);
  doc["D_xi"] = optional_json(r.D_xi);
  auto pairs = nlohmann::ordered_json::array();
  for (const auto& p : r.pairs) {
    pairs.push_back({{"i", p.i + 1},
                     {"j", p.j + 1},
                     {"R", {optional_json(p.original_R), optional_json(p.twin_R)}},
                     {"tau", {optional_json(p.original_tau), optional_json(p.twin_tau)}},
                     {"r", {optional_json(p.original_r), optional_json(p.twin_r)}}});
  }
  doc["pairs"] = std::move(pairs);
  auto layers = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < r.xi_original.size(); ++i) {
    layers.push_back({{"layer", i + 1},
                      {"gamma_tail", i < r.gamma_layers.size() ? optional_json(r.gamma_layers[i]) : nullptr},
                      {"beta_tail", i < r.beta_layers.size() ? optional_json(r.beta_layers[i]) : nullptr},
                      {"xi", {r.xi_original[i], r.xi_twin[i]}}});
  }
  doc["layers"] = std::move(layers);
  doc["warnings"] = r.warnings;
  return doc.dump(indent);
}

std::string report_csv_header() { return "label,D_R,D_tau,D_r,D_gamma,D_beta,D_xi"; }

std::string report_csv_row(const std::string& label, const DivergenceReport& r) {
  return label + "," + format_optional(r.D_R) + "," + format_optional(r.D_tau) + "," + format_optional(r.D_r) + "," +
         format_optional(r.D_gamma) + "," + format_optional(r.D_beta) + "," + format_optional(r.D_xi);
}

DivergenceReport mean_report(std::span<const DivergenceReport> reports) {
  auto mean = [&](auto member) -> std::optional<double> {
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& r : reports) {
      if (const auto& v = r.*member) {
        sum += *v;
        ++count;
      }
    }
    if (count == 0) return std::nullopt;
    return sum / static_cast<double>(count);
  };
  DivergenceReport out;
  out.D_R = mean(&DivergenceReport::D_R);
  out.D_tau = mean(&DivergenceReport::D_tau);
  out.D_r = mean(&DivergenceReport::D_r);
  out.D_gamma = mean(&DivergenceReport::D_gamma);
  out.D_beta = mean(&DivergenceReport::D_beta);
  out.D_xi = mean(&DivergenceReport::D_xi);
  return out;
}

}  // namespace mltwin
