#pragma once

// Six-phase multilayer generator: active sets, degrees, communities over a
// shared geometric reference layer, configuration-model edges,
// simplification, and inter-layer rewiring towards a target edge correlation.
//
// Random streams: every phase and layer draws from Rng(seed, "<phase>", layer)
// so the output depends only on (config, seed).

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mltwin/community.hpp"
#include "mltwin/config.hpp"
#include "mltwin/network.hpp"
#include "mltwin/rng.hpp"

namespace mltwin {

class InfeasibleError : public std::runtime_error {
 public:
  InfeasibleError(std::size_t layer, const std::string& what)
      : std::runtime_error("layer " + std::to_string(layer + 1) + " infeasible: " + what), layer_(layer) {}
  std::size_t layer() const { return layer_; }

 private:
  std::size_t layer_;
};

/// Actor positions in [0, 1]^d, shared by all layers.
class ReferenceLayer {
 public:
  ReferenceLayer(std::size_t actor_count, std::size_t dimension, Rng& rng);

  std::size_t dimension() const { return dimension_; }
  std::size_t actor_count() const { return coords_.size() / dimension_; }
  std::span<const double> point(ActorId a) const { return {coords_.data() + a * dimension_, dimension_}; }
  double squared_distance(ActorId a, ActorId b) const;

 private:
  std::size_t dimension_;
  std::vector<double> coords_;
};

/// Edge of the phase-4 multigraph, tagged with the pool it was matched in.
struct PoolEdge {
  static constexpr std::uint32_t kBackground = 0xffffffffu;
  ActorId u = 0;
  ActorId v = 0;
  std::uint32_t pool = kBackground;  // community id or kBackground
};

struct SimplifyResult {
  Layer layer;
  std::size_t conflicts = 0;  // self-loops plus surplus multi-edge copies
  std::size_t repaired = 0;
  std::size_t dropped = 0;
};

struct RewireOptions {
  double tolerance = 0.05;
  /// Attempt budget is factor * total edge count.
  double budget_factor = 50.0;
};

struct RewireReport {
  CorrelationMatrix initial;
  CorrelationMatrix achieved;
  std::size_t attempts = 0;
  std::size_t swaps = 0;
  bool converged = false;
};

struct LayerDiagnostics {
  std::size_t active = 0;
  std::size_t parity_moves = 0;
  std::size_t simplify_conflicts = 0;
  std::size_t simplify_dropped = 0;
  /// Fraction of edges crossing ground-truth communities before rewiring.
  double xi_before_rewire = 0.0;
};

struct GenerateOptions {
  std::size_t simplify_attempts = 100;
  RewireOptions rewire;
  unsigned jobs = 1;
};

struct GeneratedNetwork {
  MultilayerNetwork network;
  std::vector<LayerPartition> ground_truth;
  std::vector<LayerDiagnostics> layers;
  RewireReport rewire;
};

/// Validates `config` (complete) and runs all six phases.
GeneratedNetwork generate(const MabcdConfig& config, std::uint64_t seed, const GenerateOptions& options = {});

/// Phase 1: ⌊q·n⌉ actors chosen uniformly, returned ascending.
std::vector<ActorId> phase1_active_set(double q, std::size_t actor_count, Rng& rng);

/// Phase 2: degree of each active actor (aligned with `active`). Draws are
/// i.i.d. truncated power law, with the support endpoints guaranteed to occur
/// when there are at least two actors; a Gaussian copula couples them to the
/// labels with Kendall correlation tau; the sum is made even.
std::vector<std::uint32_t> phase2_degrees(const LayerParams& params, std::span<const ActorId> active, Rng& rng,
                                          std::size_t layer = 0);

/// Community sizes summing to `active_count`, each within [s, S]. Sizes s and S
/// are each realised once when they fit; the rest are i.i.d. power-law draws.
std::vector<std::uint32_t> community_sizes(const LayerParams& params, std::size_t active_count, Rng& rng,
                                           std::size_t layer = 0);

/// Phase 3: ground-truth partition of `active`.
LayerPartition phase3_communities(const LayerParams& params, std::span<const ActorId> active,
                                  const ReferenceLayer& reference, Rng& rng, std::size_t layer = 0);

struct EdgePools {
  std::vector<PoolEdge> edges;
  std::size_t parity_moves = 0;
};

/// Phase 4: community and background configuration-model matchings. The
/// background share of each degree is xi / (1 - sum_c (vol_c / vol)^2), capped
/// at 1, so that the realised crossing fraction is close to xi.
EdgePools phase4_edges(std::span<const ActorId> active, std::span<const std::uint32_t> degrees,
                       const LayerPartition& partition, double xi, Rng& rng);

/// Phase 5: double-edge swaps to remove self-loops and multi-edges; edges that
/// stay in conflict after `attempts` tries are dropped.
SimplifyResult phase5_simplify(std::vector<PoolEdge> edges, std::size_t actor_count,
                               std::span<const ActorId> active, std::size_t attempts, Rng& rng);

/// Phase 6: degree-preserving swaps pushing each layer pair towards the
/// target edge correlation (row-major l x l). With `communities` (one per
/// layer) a swap is only taken if it keeps the layer's count of
/// community-crossing edges unchanged.
RewireReport phase6_rewire(std::vector<Layer>& layers, std::span<const double> target, const RewireOptions& options,
                           Rng& rng, std::span<const LayerPartition> communities = {});

/// Edge correlations of all layer pairs.
CorrelationMatrix edge_correlation_matrix(std::span<const Layer> layers);

/// Φ⁻¹(p) for p in (0, 1).
double normal_quantile(double p);

}  // namespace mltwin
