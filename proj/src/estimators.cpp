#include "mltwin/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "mltwin/parallel.hpp"
#include "mltwin/power_law.hpp"
#include "mltwin/rng.hpp"

namespace mltwin {

namespace {

std::string layer_tag(std::size_t index) { return "layer " + std::to_string(index + 1) + ": "; }

std::string format_double(double x) {
  std::ostringstream out;
  out << x;
  return out.str();
}

}  // namespace

PowerLawFit fit_power_law(std::span<const std::uint32_t> samples, std::uint32_t min, std::uint32_t max) {
  if (samples.size() < 10) throw EstimationError("power-law fit needs at least 10 samples");
  if (min < 1 || max < min) throw EstimationError("power-law fit: invalid support");
  std::vector<std::size_t> histogram(max - min + 1, 0);
  double sum_log = 0.0;
  for (auto x : samples) {
    if (x < min || x > max) throw EstimationError("power-law fit: sample outside the support");
    ++histogram[x - min];
    sum_log += std::log(static_cast<double>(x));
  }
  if (std::count(histogram.begin(), histogram.end(), samples.size()) == 1) {
    throw EstimationError("power-law fit: all samples are equal");
  }
  const double mean_log = sum_log / static_cast<double>(samples.size());
  auto negative_ll = [&](double a) {
    double norm = 0.0;
    for (std::uint32_t k = min; k <= max; ++k) norm += std::pow(static_cast<double>(k), -a);
    return a * mean_log + std::log(norm);
  };

  // The log-likelihood is concave in the exponent, so golden section finds the optimum.
  const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
  double lo = kExponentLow, hi = kExponentHigh;
  double x1 = hi - ratio * (hi - lo), x2 = lo + ratio * (hi - lo);
  double f1 = negative_ll(x1), f2 = negative_ll(x2);
  while (hi - lo > 1e-9) {
    if (f1 <= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - ratio * (hi - lo);
      f1 = negative_ll(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + ratio * (hi - lo);
      f2 = negative_ll(x2);
    }
  }
  PowerLawFit fit;
  fit.exponent = 0.5 * (lo + hi);
  fit.pinned = fit.exponent - kExponentLow < 1e-3 || kExponentHigh - fit.exponent < 1e-3;

  const TruncatedPowerLaw law(min, max, fit.exponent);
  double cumulative = 0.0;
  for (std::uint32_t k = min; k <= max; ++k) {
    cumulative += static_cast<double>(histogram[k - min]);
    const double empirical = cumulative / static_cast<double>(samples.size());
    fit.ks = std::max(fit.ks, std::abs(empirical - law.cdf(k)));
  }
  return fit;
}

TrivialParams extract_trivial(const MultilayerNetwork& net) {
  TrivialParams t;
  t.n = net.actor_count();
  t.l = net.layer_count();
  std::vector<char> in_union(t.n, 0);
  for (const Layer& layer : net.layers()) {
    for (ActorId a : layer.active_nodes()) in_union[a] = 1;
  }
  const auto union_size = static_cast<std::size_t>(std::count(in_union.begin(), in_union.end(), 1));
  for (std::size_t i = 0; i < t.l; ++i) {
    const Layer& layer = net.layer(i);
    if (layer.active_count() == 0) throw EstimationError(layer_tag(i) + "no active actors");
    std::uint32_t lo = 0, hi = 0;
    for (auto k : layer.degrees()) {
      if (k == 0) continue;
      lo = lo == 0 ? k : std::min(lo, k);
      hi = std::max(hi, k);
    }
    if (hi == 0) throw EstimationError(layer_tag(i) + "no positive-degree actors");
    t.delta.push_back(lo);
    t.Delta.push_back(hi);
    t.q.push_back(static_cast<double>(layer.active_count()) / static_cast<double>(union_size));
  }
  return t;
}

TauEstimate estimate_tau(const MultilayerNetwork& net, std::uint64_t seed) {
  const std::size_t n = net.actor_count();
  const auto totals = total_degree(net);
  Rng rng(seed, "tau-ties");
  std::vector<std::uint64_t> tie_key(n);
  for (auto& k : tie_key) k = rng.next();
  std::vector<ActorId> order(n);
  std::iota(order.begin(), order.end(), ActorId{0});
  std::sort(order.begin(), order.end(), [&](ActorId a, ActorId b) {
    return totals[a] != totals[b] ? totals[a] < totals[b] : tie_key[a] < tie_key[b];
  });
  TauEstimate out;
  out.labels.resize(n);
  for (std::size_t pos = 0; pos < n; ++pos) out.labels[order[pos]] = static_cast<std::uint32_t>(pos + 1);

  for (std::size_t i = 0; i < net.layer_count(); ++i) {
    const Layer& layer = net.layer(i);
    std::vector<double> x, y;
    for (ActorId a : layer.positive_degree_nodes()) {
      x.push_back(out.labels[a]);
      y.push_back(layer.degrees()[a]);
    }
    std::optional<double> tau;
    if (x.size() >= 2) tau = kendall_tau(x, y);
    if (!tau) {
      out.warnings.push_back(layer_tag(i) + "degrees are all tied; tau set to 0");
      tau = 0.0;
    }
    out.tau.push_back(*tau);
  }
  return out;
}

DegreeEstimate estimate_degree_params(const Layer& layer, std::size_t index) {
  std::vector<std::uint32_t> degrees;
  for (auto k : layer.degrees()) {
    if (k > 0) degrees.push_back(k);
  }
  DegreeEstimate out;
  if (degrees.empty()) throw EstimationError(layer_tag(index) + "no positive-degree actors");
  const auto [lo, hi] = std::minmax_element(degrees.begin(), degrees.end());
  try {
    out.fit = fit_power_law(degrees, *lo, *hi);
  } catch (const EstimationError& e) {
    out.warnings.push_back(layer_tag(index) + "degree fit skipped (" + e.what() + "); gamma set to 2.5");
    out.fit = PowerLawFit{2.5, 0.0, false};
    out.gamma = 2.5;
    return out;
  }
  if (out.fit.pinned) {
    out.warnings.push_back(layer_tag(index) + "degree exponent pinned at search bound " + format_double(out.fit.exponent));
  }
  out.gamma = std::clamp(out.fit.exponent, 2.01, 2.99);
  if (out.gamma != out.fit.exponent) {
    out.warnings.push_back(layer_tag(index) + "gamma " + format_double(out.fit.exponent) + " clamped to " +
                           format_double(out.gamma));
  }
  return out;
}

CommunityEstimate estimate_community_params(const LayerPartition& partition, std::size_t index) {
  CommunityEstimate out;
  const auto sizes = partition.community_sizes();
  if (sizes.empty()) throw EstimationError(layer_tag(index) + "empty partition");
  std::vector<std::uint32_t> values(sizes.begin(), sizes.end());
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  out.s = *lo;
  out.S = *hi;
  if (values.size() == 1) {
    out.warnings.push_back(layer_tag(index) + "single community; beta set to 1.5");
    return out;
  }
  try {
    out.fit = fit_power_law(values, out.s, out.S);
  } catch (const EstimationError& e) {
    out.warnings.push_back(layer_tag(index) + "size fit skipped (" + e.what() + "); beta set to 1.5");
    return out;
  }
  if (out.fit->pinned) {
    out.warnings.push_back(layer_tag(index) + "size exponent pinned at search bound " +
                           format_double(out.fit->exponent));
  }
  out.beta = std::clamp(out.fit->exponent, 1.01, 1.99);
  if (out.beta != out.fit->exponent) {
    out.warnings.push_back(layer_tag(index) + "beta " + format_double(out.fit->exponent) + " clamped to " +
                           format_double(out.beta));
  }
  return out;
}

double crossing_fraction(const Layer& layer, const LayerPartition& partition) {
  if (layer.edge_count() == 0) throw EstimationError("noise level undefined on an edgeless layer");
  std::size_t crossing = 0;
  for (const Edge& e : layer.edges()) {
    if (partition.community_of(e.u) != partition.community_of(e.v)) ++crossing;
  }
  return static_cast<double>(crossing) / static_cast<double>(layer.edge_count());
}

double estimate_xi(const Layer& layer, const LayerPartition& partition) {
  return std::clamp(crossing_fraction(layer, partition), 0.001, 0.999);
}

std::optional<double> layer_degree_tau(const MultilayerNetwork& net, std::size_t i, std::size_t j) {
  const auto common = common_active(net, i, j);
  if (common.size() < 2) return std::nullopt;
  const auto& di = net.layer(i).degrees();
  const auto& dj = net.layer(j).degrees();
  std::vector<double> x, y;
  x.reserve(common.size());
  y.reserve(common.size());
  for (ActorId a : common) {
    x.push_back(di[a]);
    y.push_back(dj[a]);
  }
  return kendall_tau(x, y);
}

std::optional<double> induced_ami(const LayerPartition& a, const LayerPartition& b) {
  std::vector<ActorId> common;
  std::set_intersection(a.nodes().begin(), a.nodes().end(), b.nodes().begin(), b.nodes().end(),
                        std::back_inserter(common));
  if (common.empty()) return std::nullopt;
  const auto pa = induce(a, common);
  const auto pb = induce(b, common);
  return std::max(0.0, adjusted_mutual_information(*pa, *pb));
}

ObservedMatrices observed_matrices(const MultilayerNetwork& net, std::span<const LayerPartition> partitions) {
  const std::size_t l = net.layer_count();
  if (partitions.size() != l) throw std::invalid_argument("observed_matrices: one partition per layer required");
  ObservedMatrices out{CorrelationMatrix(l), CorrelationMatrix(l), CorrelationMatrix(l)};
  for (std::size_t i = 0; i < l; ++i) {
    for (std::size_t j = i + 1; j < l; ++j) {
      out.R.set(i, j, edge_correlation(net.layer(i), net.layer(j)));
      out.tau.set(i, j, layer_degree_tau(net, i, j));
      out.r.set(i, j, induced_ami(partitions[i], partitions[j]));
    }
  }
  return out;
}

ExtractionResult extract(const MultilayerNetwork& net, std::uint64_t seed, unsigned jobs) {
  const TrivialParams trivial = extract_trivial(net);
  const std::size_t l = trivial.l;
  ExtractionResult out;
  out.seed = seed;
  out.partitions.resize(l);
  out.layers.resize(l);

  std::vector<ModularityResult> detected(l);
  parallel_for(l, jobs, [&](std::size_t i) { detected[i] = greedy_modularity(net.layer(i)); });
  for (std::size_t i = 0; i < l; ++i) {
    out.partitions[i] = detected[i].partition;
    out.layers[i].modularity = detected[i].modularity;
    out.layers[i].communities = detected[i].partition.community_count();
  }

  const TauEstimate tau = estimate_tau(net, seed);
  out.warnings.insert(out.warnings.end(), tau.warnings.begin(), tau.warnings.end());
  out.observed = observed_matrices(net, out.partitions);

  MabcdConfig& config = out.config;
  config.n = trivial.n;
  config.seed = seed;
  config.R = uniform_correlation(l, 0.0);
  for (std::size_t i = 0; i < l; ++i) {
    for (std::size_t j = 0; j < l; ++j) {
      if (i != j) config.R[i * l + j] = out.observed.R.at(i, j).value_or(0.0);
    }
  }
  for (std::size_t i = 0; i < l; ++i) {
    for (std::size_t j = i + 1; j < l; ++j) {
      if (!out.observed.R.at(i, j)) {
        out.warnings.push_back("layers " + std::to_string(i + 1) + "," + std::to_string(j + 1) +
                               ": edge correlation undefined; target set to 0");
      }
    }
  }

  for (std::size_t i = 0; i < l; ++i) {
    const Layer& layer = net.layer(i);
    LayerParams p;
    p.q = trivial.q[i];
    p.tau = tau.tau[i];
    p.delta = trivial.delta[i];
    p.Delta = trivial.Delta[i];

    DegreeEstimate degree = estimate_degree_params(layer, i);
    out.warnings.insert(out.warnings.end(), degree.warnings.begin(), degree.warnings.end());
    p.gamma = degree.gamma;
    out.layers[i].degree_fit = degree.fit;

    CommunityEstimate community = estimate_community_params(out.partitions[i], i);
    out.warnings.insert(out.warnings.end(), community.warnings.begin(), community.warnings.end());
    p.beta = community.beta;
    p.s = community.s;
    p.S = community.S;
    out.layers[i].size_fit = community.fit;
    if (p.s <= p.delta) {
      out.warnings.push_back(layer_tag(i) + "s " + std::to_string(p.s) + " raised to delta+1 = " +
                             std::to_string(p.delta + 1));
      p.s = p.delta + 1;
    }
    p.S = std::max(p.S, p.s);
    p.S = std::min<std::uint32_t>(p.S, static_cast<std::uint32_t>(trivial.n));

    out.layers[i].xi_raw = crossing_fraction(layer, out.partitions[i]);
    p.xi = std::clamp(out.layers[i].xi_raw, 0.001, 0.999);
    config.layers.push_back(p);
  }
  validate(config, Completeness::kPartial);
  return out;
}

namespace {

nlohmann::ordered_json matrix_json(const CorrelationMatrix& m) {
  auto rows = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < m.size(); ++i) {
    auto row = nlohmann::ordered_json::array();
    for (std::size_t j = 0; j < m.size(); ++j) {
      const auto v = m.at(i, j);
      row.push_back(v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

nlohmann::ordered_json fit_json(const std::optional<PowerLawFit>& fit) {
  if (!fit) return nullptr;
  return {{"exponent", fit->exponent}, {"ks", fit->ks}, {"pinned", fit->pinned}};
}

}  // namespace

std::string extraction_to_json(const ExtractionResult& result, int indent) {
  auto doc = nlohmann::ordered_json::parse(config_to_json(result.config, -1));
  nlohmann::ordered_json diag;
  diag["tie_break_seed"] = result.seed;
  auto layers = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < result.layers.size(); ++i) {
    const LayerExtraction& x = result.layers[i];
    layers.push_back({{"layer", i + 1},
                      {"communities", x.communities},
                      {"modularity", x.modularity},
                      {"xi_unclamped", x.xi_raw},
                      {"degree_fit", fit_json(x.degree_fit)},
                      {"size_fit", fit_json(x.size_fit)}});
  }
  diag["layers"] = std::move(layers);
  diag["A_R"] = matrix_json(result.observed.R);
  diag["A_tau"] = matrix_json(result.observed.tau);
  diag["A_r"] = matrix_json(result.observed.r);
  diag["warnings"] = result.warnings;
  doc["diagnostics"] = std::move(diag);
  return doc.dump(indent);
}

void save_extraction(const std::filesystem::path& path, const ExtractionResult& result) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write report: " + path.string());
  out << extraction_to_json(result) << '\n';
}

}  // namespace mltwin
