#include "mltwin/community.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <queue>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>

namespace mltwin {

LayerPartition::LayerPartition(std::vector<ActorId> nodes, std::span<const std::uint32_t> labels) {
  if (nodes.size() != labels.size()) throw std::invalid_argument("partition: nodes/labels size mismatch");
  std::vector<std::size_t> order(nodes.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return nodes[a] < nodes[b]; });
  nodes_.reserve(nodes.size());
  labels_.reserve(nodes.size());
  std::unordered_map<std::uint32_t, CommunityId> compact;
  for (std::size_t k : order) {
    if (!nodes_.empty() && nodes_.back() == nodes[k]) throw std::invalid_argument("partition: duplicate node");
    nodes_.push_back(nodes[k]);
    auto [it, inserted] = compact.try_emplace(labels[k], static_cast<CommunityId>(compact.size()));
    labels_.push_back(it->second);
  }
  community_count_ = compact.size();
}

std::optional<CommunityId> LayerPartition::community_of(ActorId a) const {
  auto it = std::lower_bound(nodes_.begin(), nodes_.end(), a);
  if (it == nodes_.end() || *it != a) return std::nullopt;
  return labels_[static_cast<std::size_t>(it - nodes_.begin())];
}

std::vector<std::size_t> LayerPartition::community_sizes() const {
  std::vector<std::size_t> sizes(community_count_, 0);
  for (CommunityId c : labels_) ++sizes[c];
  return sizes;
}

// ---------------------------------------------------------------------------

CorrelationMatrix::CorrelationMatrix(std::size_t size)
    : size_(size), values_(size * size, std::numeric_limits<double>::quiet_NaN()) {
  for (std::size_t i = 0; i < size; ++i) values_[i * size + i] = 1.0;
}

std::optional<double> CorrelationMatrix::at(std::size_t i, std::size_t j) const {
  if (i >= size_ || j >= size_) throw std::out_of_range("correlation matrix index");
  const double v = values_[i * size_ + j];
  if (std::isnan(v)) return std::nullopt;
  return v;
}

void CorrelationMatrix::set(std::size_t i, std::size_t j, std::optional<double> value) {
  if (i >= size_ || j >= size_) throw std::out_of_range("correlation matrix index");
  const double v = value.value_or(std::numeric_limits<double>::quiet_NaN());
  values_[i * size_ + j] = v;
  values_[j * size_ + i] = v;
}

std::vector<double> CorrelationMatrix::row_major() const { return values_; }

// ---------------------------------------------------------------------------

double modularity(const Layer& layer, const LayerPartition& partition) {
  const double m = static_cast<double>(layer.edge_count());
  if (m == 0) return 0.0;
  const auto& deg = layer.degrees();
  std::vector<std::int64_t> label(layer.actor_count(), -1);
  std::int64_t next = static_cast<std::int64_t>(partition.community_count());
  for (std::size_t k = 0; k < partition.size(); ++k) label[partition.nodes()[k]] = partition.labels()[k];
  for (std::size_t a = 0; a < label.size(); ++a) {
    if (deg[a] > 0 && label[a] < 0) label[a] = next++;
  }
  std::vector<double> internal(static_cast<std::size_t>(next), 0.0);
  std::vector<double> volume(static_cast<std::size_t>(next), 0.0);
  for (const Edge& e : layer.edges()) {
    if (label[e.u] == label[e.v]) internal[static_cast<std::size_t>(label[e.u])] += 1.0;
  }
  for (std::size_t a = 0; a < label.size(); ++a) {
    if (deg[a] > 0) volume[static_cast<std::size_t>(label[a])] += deg[a];
  }
  double q = 0.0;
  for (std::size_t c = 0; c < internal.size(); ++c) {
    q += internal[c] / m - (volume[c] / (2.0 * m)) * (volume[c] / (2.0 * m));
  }
  return q;
}

namespace {

// Merge candidate ordered by gain (descending) then pair ids (ascending).
struct MergeKey {
  std::int64_t gain;
  std::uint32_t i;
  std::uint32_t j;

  bool operator<(const MergeKey& o) const {
    if (gain != o.gain) return gain > o.gain;
    if (i != o.i) return i < o.i;
    return j < o.j;
  }
};

}  // namespace

ModularityResult greedy_modularity(const Layer& layer) {
  if (layer.edge_count() == 0) throw std::invalid_argument("greedy_modularity: layer has no edges");

  const std::vector<ActorId> nodes = layer.positive_degree_nodes();
  std::vector<std::uint32_t> local(layer.actor_count(), 0);
  for (std::size_t k = 0; k < nodes.size(); ++k) local[nodes[k]] = static_cast<std::uint32_t>(k);

  const std::size_t count = nodes.size();
  const auto two_m = static_cast<std::int64_t>(2 * layer.edge_count());
  std::vector<std::unordered_map<std::uint32_t, std::int64_t>> links(count);
  std::vector<std::int64_t> volume(count, 0);
  for (const Edge& e : layer.edges()) {
    const auto a = local[e.u];
    const auto b = local[e.v];
    links[a][b] += 1;
    links[b][a] += 1;
  }
  for (std::size_t k = 0; k < count; ++k) volume[k] = layer.degrees()[nodes[k]];

  // gain * 2m^2 = 2m * w_ij - D_i * D_j, exact in integers.
  auto gain = [&](std::uint32_t i, std::uint32_t j) {
    return two_m * links[i].at(j) - volume[i] * volume[j];
  };
  auto key = [&](std::uint32_t i, std::uint32_t j) {
    return MergeKey{gain(i, j), std::min(i, j), std::max(i, j)};
  };

  // Lazy-deletion heap: an entry is current iff its gain still matches.
  std::priority_queue<MergeKey, std::vector<MergeKey>, std::function<bool(const MergeKey&, const MergeKey&)>> heap(
      [](const MergeKey& x, const MergeKey& y) { return y < x; });
  for (std::uint32_t i = 0; i < count; ++i) {
    for (const auto& [j, w] : links[i]) {
      if (i < j) heap.push(key(i, j));
    }
  }
  auto current = [&](const MergeKey& k) {
    const auto it = links[k.i].find(k.j);
    return it != links[k.i].end() && two_m * it->second - volume[k.i] * volume[k.j] == k.gain;
  };

  std::vector<std::vector<std::uint32_t>> members(count);
  for (std::uint32_t i = 0; i < count; ++i) members[i].push_back(i);

  std::size_t merges = 0;
  while (!heap.empty()) {
    const MergeKey top = heap.top();
    if (!current(top)) {
      heap.pop();
      continue;
    }
    if (top.gain <= 0) break;
    heap.pop();
    const std::uint32_t a = top.i;
    const std::uint32_t b = top.j;

    volume[a] += volume[b];
    for (const auto& [k, w] : links[b]) {
      if (k == a) continue;
      links[a][k] += w;
      auto& back = links[k];
      back[a] += w;
      back.erase(b);
    }
    links[a].erase(b);
    links[b].clear();
    volume[b] = 0;
    for (const auto& [k, w] : links[a]) heap.push(key(a, k));

    auto& into = members[a];
    into.insert(into.end(), members[b].begin(), members[b].end());
    members[b].clear();
    members[b].shrink_to_fit();
    ++merges;
  }

  std::vector<std::uint32_t> labels(count, 0);
  for (std::uint32_t c = 0; c < count; ++c) {
    for (auto v : members[c]) labels[v] = c;
  }
  ModularityResult result;
  result.partition = LayerPartition(nodes, labels);
  result.modularity = modularity(layer, result.partition);
  result.merges = merges;
  return result;
}

std::optional<LayerPartition> induce(const LayerPartition& partition, std::span<const ActorId> nodes) {
  std::vector<ActorId> kept;
  std::vector<std::uint32_t> labels;
  for (ActorId a : nodes) {
    if (auto c = partition.community_of(a)) {
      kept.push_back(a);
      labels.push_back(*c);
    }
  }
  if (kept.empty()) return std::nullopt;
  return LayerPartition(std::move(kept), labels);
}

// ---------------------------------------------------------------------------

double adjusted_mutual_information(const LayerPartition& p, const LayerPartition& q) {
  if (!std::equal(p.nodes().begin(), p.nodes().end(), q.nodes().begin(), q.nodes().end())) {
    throw std::invalid_argument("adjusted_mutual_information: partitions cover different nodes");
  }
  const std::size_t n = p.size();
  if (n == 0) throw std::invalid_argument("adjusted_mutual_information: empty partitions");

  const auto a = p.community_sizes();
  const auto b = q.community_sizes();
  std::map<std::pair<CommunityId, CommunityId>, std::size_t> table;
  for (std::size_t k = 0; k < n; ++k) ++table[{p.labels()[k], q.labels()[k]}];

  const double total = static_cast<double>(n);
  double mi = 0.0;
  for (const auto& [cell, count] : table) {
    const double nij = static_cast<double>(count);
    mi += nij / total *
          std::log(total * nij / (static_cast<double>(a[cell.first]) * static_cast<double>(b[cell.second])));
  }
  auto entropy = [&](const std::vector<std::size_t>& sizes) {
    double h = 0.0;
    for (auto s : sizes) {
      const double f = static_cast<double>(s) / total;
      h -= f * std::log(f);
    }
    return h;
  };
  const double ha = entropy(a);
  const double hb = entropy(b);

  std::vector<double> log_fact(n + 1, 0.0);
  for (std::size_t k = 1; k <= n; ++k) log_fact[k] = log_fact[k - 1] + std::log(static_cast<double>(k));

  double emi = 0.0;
  for (std::size_t ai : a) {
    for (std::size_t bj : b) {
      const std::size_t lo = std::max<std::size_t>(1, ai + bj > n ? ai + bj - n : 0);
      const std::size_t hi = std::min(ai, bj);
      const double base = log_fact[ai] + log_fact[bj] + log_fact[n - ai] + log_fact[n - bj] - log_fact[n];
      for (std::size_t nij = lo; nij <= hi; ++nij) {
        const double log_p = base - log_fact[nij] - log_fact[ai - nij] - log_fact[bj - nij] -
                             log_fact[n - ai - bj + nij];
        const double x = static_cast<double>(nij);
        emi += x / total *
               std::log(total * x / (static_cast<double>(ai) * static_cast<double>(bj))) * std::exp(log_p);
      }
    }
  }

  const double denominator = 0.5 * (ha + hb) - emi;
  if (std::abs(denominator) < 1e-12) return p.labels().size() == q.labels().size() &&
                                                     std::equal(p.labels().begin(), p.labels().end(),
                                                                q.labels().begin())
                                                 ? 1.0
                                                 : 0.0;
  return (mi - emi) / denominator;
}

// ---------------------------------------------------------------------------

namespace {

// Sorts `v` in place and returns the number of inversions.
std::int64_t count_inversions(std::vector<double>& v, std::vector<double>& scratch) {
  const std::size_t n = v.size();
  std::int64_t swaps = 0;
  scratch.resize(n);
  for (std::size_t width = 1; width < n; width *= 2) {
    for (std::size_t lo = 0; lo < n; lo += 2 * width) {
      const std::size_t mid = std::min(lo + width, n);
      const std::size_t hi = std::min(lo + 2 * width, n);
      std::size_t i = lo, j = mid, k = lo;
      while (i < mid && j < hi) {
        if (v[j] < v[i]) {
          swaps += static_cast<std::int64_t>(mid - i);
          scratch[k++] = v[j++];
        } else {
          scratch[k++] = v[i++];
        }
      }
      while (i < mid) scratch[k++] = v[i++];
      while (j < hi) scratch[k++] = v[j++];
    }
    std::swap(v, scratch);
  }
  return swaps;
}

template <class It, class Eq>
std::int64_t tied_pairs(It first, It last, Eq eq) {
  std::int64_t total = 0;
  while (first != last) {
    It run = first;
    std::int64_t t = 0;
    while (run != last && eq(*run, *first)) {
      ++run;
      ++t;
    }
    total += t * (t - 1) / 2;
    first = run;
  }
  return total;
}

}  // namespace

std::optional<double> kendall_tau(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("kendall_tau: length mismatch");
  if (x.size() < 2) throw std::invalid_argument("kendall_tau: need at least two observations");
  const std::size_t n = x.size();

  std::vector<std::pair<double, double>> pairs(n);
  for (std::size_t k = 0; k < n; ++k) pairs[k] = {x[k], y[k]};
  std::sort(pairs.begin(), pairs.end());

  const auto n0 = static_cast<std::int64_t>(n) * static_cast<std::int64_t>(n - 1) / 2;
  const std::int64_t ties_x =
      tied_pairs(pairs.begin(), pairs.end(), [](const auto& a, const auto& b) { return a.first == b.first; });
  const std::int64_t ties_xy = tied_pairs(pairs.begin(), pairs.end(), [](const auto& a, const auto& b) { return a == b; });

  std::vector<double> ys(n);
  for (std::size_t k = 0; k < n; ++k) ys[k] = pairs[k].second;
  std::vector<double> scratch;
  const std::int64_t swaps = count_inversions(ys, scratch);
  const std::int64_t ties_y = tied_pairs(ys.begin(), ys.end(), [](double a, double b) { return a == b; });

  if (n0 == ties_x || n0 == ties_y) return std::nullopt;
  const double numerator = static_cast<double>(n0 - ties_x - ties_y + ties_xy - 2 * swaps);
  const double denominator =
      std::sqrt(static_cast<double>(n0 - ties_x)) * std::sqrt(static_cast<double>(n0 - ties_y));
  return std::clamp(numerator / denominator, -1.0, 1.0);
}

// ---------------------------------------------------------------------------

void write_partition(std::ostream& out, const LayerPartition& partition) {
  for (std::size_t k = 0; k < partition.size(); ++k) {
    out << (partition.nodes()[k] + 1) << ' ' << (partition.labels()[k] + 1) << '\n';
  }
}

void save_partition(const std::filesystem::path& path, const LayerPartition& partition) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write partition file: " + path.string());
  write_partition(out, partition);
}

LayerPartition read_partition(std::istream& in) {
  std::vector<ActorId> nodes;
  std::vector<std::uint32_t> labels;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    long long actor = 0, community = 0;
    if (!(fields >> actor)) continue;
    if (!(fields >> community) || actor < 1 || community < 1) {
      throw ParseError("expected '<actor> <community>' with 1-based ids", line_no);
    }
    nodes.push_back(static_cast<ActorId>(actor - 1));
    labels.push_back(static_cast<std::uint32_t>(community - 1));
  }
  return LayerPartition(std::move(nodes), labels);
}

LayerPartition load_partition(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open partition file: " + path.string());
  return read_partition(in);
}

}  // namespace mltwin
