#pragma once

// Community detection (Clauset-Newman-Moore greedy modularity), partition
// comparison (adjusted mutual information) and Kendall rank correlation.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "mltwin/network.hpp"

namespace mltwin {

using CommunityId = std::uint32_t;

/// Actor -> community map on a set of nodes. Community ids are 0-based and
/// contiguous, numbered in order of first appearance along ascending actor id.
class LayerPartition {
 public:
  LayerPartition() = default;
  /// `nodes` need not be sorted but must be unique; labels are arbitrary.
  LayerPartition(std::vector<ActorId> nodes, std::span<const std::uint32_t> labels);

  std::span<const ActorId> nodes() const { return nodes_; }
  std::span<const CommunityId> labels() const { return labels_; }
  std::size_t size() const { return nodes_.size(); }
  bool empty() const { return nodes_.empty(); }
  std::size_t community_count() const { return community_count_; }
  std::optional<CommunityId> community_of(ActorId a) const;
  std::vector<std::size_t> community_sizes() const;

  bool operator==(const LayerPartition&) const = default;

 private:
  std::vector<ActorId> nodes_;
  std::vector<CommunityId> labels_;
  std::size_t community_count_ = 0;
};

/// Symmetric l x l matrix whose entries may be undefined. Diagonal is 1.
class CorrelationMatrix {
 public:
  CorrelationMatrix() = default;
  explicit CorrelationMatrix(std::size_t size);

  std::size_t size() const { return size_; }
  std::optional<double> at(std::size_t i, std::size_t j) const;
  void set(std::size_t i, std::size_t j, std::optional<double> value);
  /// Row-major values, NaN for undefined entries.
  std::vector<double> row_major() const;

 private:
  std::size_t size_ = 0;
  std::vector<double> values_;  // NaN marks undefined
};

struct ModularityResult {
  LayerPartition partition;
  double modularity = 0.0;
  std::size_t merges = 0;
};

/// Newman-Girvan modularity of `partition` on the edges of `layer`. Nodes of
/// positive degree missing from the partition count as singletons.
double modularity(const Layer& layer, const LayerPartition& partition);

/// CNM agglomeration over the positive-degree nodes of `layer`. Ties between
/// equal gains go to the lexicographically smallest (i, j) community pair; the
/// merged community keeps id i. Throws std::invalid_argument on an edgeless layer.
ModularityResult greedy_modularity(const Layer& layer);

/// Restriction of `partition` to `nodes` (nodes outside the domain are
/// skipped), ids re-compacted. std::nullopt when nothing remains.
std::optional<LayerPartition> induce(const LayerPartition& partition, std::span<const ActorId> nodes);

/// AMI with arithmetic-mean normalisation and the exact hypergeometric
/// expectation. Both partitions must cover the same nodes. A zero denominator
/// yields 1 for equal partitions and 0 otherwise. Values may be negative.
double adjusted_mutual_information(const LayerPartition& p, const LayerPartition& q);

/// Kendall tau-b in O(n log n). std::nullopt when either side is constant.
/// Throws std::invalid_argument when lengths differ or are below 2.
std::optional<double> kendall_tau(std::span<const double> x, std::span<const double> y);

/// `<actor> <community>` lines, both 1-based.
void write_partition(std::ostream& out, const LayerPartition& partition);
void save_partition(const std::filesystem::path& path, const LayerPartition& partition);
LayerPartition read_partition(std::istream& in);
LayerPartition load_partition(const std::filesystem::path& path);

}  // namespace mltwin
