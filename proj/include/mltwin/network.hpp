#pragma once

// Multilayer network data model and the layered edge-list file format.
//
// Internally actors are 0-based indices in [0, n); the text format uses
// 1-based ids. Layers are likewise 0-based in code and 1-based on disk.

#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mltwin {

using ActorId = std::uint32_t;
using DegreeSequence = std::vector<std::uint32_t>;

/// Undirected edge stored with u < v.
struct Edge {
  ActorId u = 0;
  ActorId v = 0;

  Edge() = default;
  Edge(ActorId a, ActorId b) : u(a < b ? a : b), v(a < b ? b : a) {}

  auto operator<=>(const Edge&) const = default;
};

inline std::uint64_t edge_key(const Edge& e) {
  return (static_cast<std::uint64_t>(e.u) << 32) | e.v;
}

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One simple undirected graph over the actors active in it.
class Layer {
 public:
  Layer() = default;

  /// `active` and `edges` are normalised (sorted, deduplicated); every edge
  /// endpoint is added to the active set. Throws ValidationError on self-loops
  /// or out-of-range ids.
  Layer(std::size_t actor_count, std::vector<ActorId> active, std::vector<Edge> edges);

  std::size_t actor_count() const { return mask_.size(); }
  bool is_active(ActorId a) const { return a < mask_.size() && mask_[a] != 0; }
  std::span<const ActorId> active_nodes() const { return active_; }
  std::size_t active_count() const { return active_.size(); }
  std::span<const Edge> edges() const { return edges_; }
  std::size_t edge_count() const { return edges_.size(); }
  bool has_edge(ActorId a, ActorId b) const;

  /// Degree of every actor (0 outside the active set).
  const DegreeSequence& degrees() const { return degrees_; }
  /// Active actors with at least one incident edge, ascending.
  std::vector<ActorId> positive_degree_nodes() const;

 private:
  std::vector<char> mask_;
  std::vector<ActorId> active_;
  std::vector<Edge> edges_;
  DegreeSequence degrees_;
};

/// Actors [n], layers [l], and one simple graph per layer. Immutable.
class MultilayerNetwork {
 public:
  MultilayerNetwork(std::size_t actor_count, std::vector<Layer> layers);

  std::size_t actor_count() const { return actor_count_; }
  std::size_t layer_count() const { return layers_.size(); }
  const Layer& layer(std::size_t i) const;
  std::span<const Layer> layers() const { return layers_; }

 private:
  std::size_t actor_count_;
  std::vector<Layer> layers_;
};

/// Degree sequence of layer i (0-based). Throws std::out_of_range.
DegreeSequence layer_degree(const MultilayerNetwork& net, std::size_t i);

/// Per-actor sum of degrees over all layers.
DegreeSequence total_degree(const MultilayerNetwork& net);

/// V_i ∩ V_j, ascending.
std::vector<ActorId> common_active(const MultilayerNetwork& net, std::size_t i, std::size_t j);

/// |E_i^j ∩ E_j^i| / min(|E_i^j|, |E_j^i|) where E_i^j are the edges of layer
/// i with both endpoints active in layer j. std::nullopt when the minimum is 0.
std::optional<double> edge_correlation(const Layer& a, const Layer& b);

/// Counters for input problems that are repaired rather than rejected.
struct LoadReport {
  std::size_t self_loops_dropped = 0;
  std::size_t duplicate_edges_dropped = 0;
};

/// Accumulates actors and edges, dropping self-loops and repeated edges.
class NetworkBuilder {
 public:
  NetworkBuilder(std::size_t actor_count, std::size_t layer_count);

  void add_active(std::size_t layer, ActorId actor);
  /// Returns false for a dropped self-loop; duplicates are collapsed by build().
  bool add_edge(std::size_t layer, ActorId a, ActorId b);

  const LoadReport& report() const { return report_; }
  /// Moves the accumulated layers out; call once. `report()` stays valid.
  MultilayerNetwork build();

 private:
  void check(std::size_t layer, ActorId actor) const;

  std::size_t actor_count_;
  std::vector<std::vector<ActorId>> active_;
  std::vector<std::vector<Edge>> edges_;
  LoadReport report_;
};

struct LoadOptions {
  /// Map arbitrary actor tokens to 1..n in order of first appearance instead
  /// of requiring integer ids in [1, n].
  bool relabel = false;
};

struct LoadedNetwork {
  MultilayerNetwork network;
  LoadReport report;
  /// External token of each actor (index = internal id); only set when relabelling.
  std::vector<std::string> external_ids;
};

LoadedNetwork read_network(std::istream& in, const LoadOptions& options = {});
/// Throws std::runtime_error when the file cannot be opened.
LoadedNetwork load_network(const std::filesystem::path& path, const LoadOptions& options = {});

void write_network(std::ostream& out, const MultilayerNetwork& net);
void save_network(const std::filesystem::path& path, const MultilayerNetwork& net);
/// Writes `<internal> <external>` lines for a relabelling map.
void save_id_map(const std::filesystem::path& path, std::span<const std::string> external_ids);

}  // namespace mltwin
