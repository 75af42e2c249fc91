#include "mltwin/generator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

#include "mltwin/parallel.hpp"
#include "mltwin/power_law.hpp"

namespace mltwin {

double normal_quantile(double p) {
  // Acklam's rational approximation, polished with one Halley step.
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                 1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                 6.680131188771972e+01, -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                 -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                 3.754408661907416e+00};
  constexpr double low = 0.02425;
  double x;
  if (p < low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - low) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double e = 0.5 * std::erfc(-x / std::numbers::sqrt2) - p;
  const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
  return x - u / (1.0 + 0.5 * x * u);
}

ReferenceLayer::ReferenceLayer(std::size_t actor_count, std::size_t dimension, Rng& rng)
    : dimension_(dimension), coords_(actor_count * dimension) {
  if (dimension == 0) throw std::invalid_argument("reference layer dimension must be positive");
  for (double& x : coords_) x = rng.uniform();
}

double ReferenceLayer::squared_distance(ActorId a, ActorId b) const {
  const double* pa = coords_.data() + a * dimension_;
  const double* pb = coords_.data() + b * dimension_;
  double sum = 0.0;
  for (std::size_t k = 0; k < dimension_; ++k) {
    const double diff = pa[k] - pb[k];
    sum += diff * diff;
  }
  return sum;
}

// ---------------------------------------------------------------------------
// Phase 1

std::vector<ActorId> phase1_active_set(double q, std::size_t actor_count, Rng& rng) {
  const std::size_t target = std::min(active_target(q, actor_count), actor_count);
  std::vector<ActorId> ids(actor_count);
  std::iota(ids.begin(), ids.end(), ActorId{0});
  for (std::size_t k = 0; k < target; ++k) {
    const auto j = k + static_cast<std::size_t>(rng.below(actor_count - k));
    std::swap(ids[k], ids[j]);
  }
  ids.resize(target);
  std::sort(ids.begin(), ids.end());
  return ids;
}

// ---------------------------------------------------------------------------
// Phase 2

std::vector<std::uint32_t> phase2_degrees(const LayerParams& p, std::span<const ActorId> active, Rng& rng,
                                          std::size_t layer) {
  const std::size_t m = active.size();
  if (m == 0) throw InfeasibleError(layer, "no active actors");
  const TruncatedPowerLaw law(p.delta, p.Delta, p.gamma);
  std::vector<std::uint32_t> draws(m);
  for (auto& x : draws) x = law.sample(rng);

  if (m >= 2 && p.delta != p.Delta) {
    if (std::find(draws.begin(), draws.end(), p.Delta) == draws.end()) {
      draws[static_cast<std::size_t>(rng.below(m))] = p.Delta;
    }
    if (std::find(draws.begin(), draws.end(), p.delta) == draws.end()) {
      std::size_t k = static_cast<std::size_t>(rng.below(m));
      while (draws[k] == p.Delta) k = (k + 1) % m;
      draws[k] = p.delta;
    }
  }
  std::sort(draws.begin(), draws.end());

  // Gaussian copula between label rank and degree rank.
  const double rho = std::sin(std::numbers::pi * p.tau / 2.0);
  const double spread = std::sqrt(std::max(0.0, 1.0 - rho * rho));
  std::vector<double> z(m);
  for (std::size_t k = 0; k < m; ++k) {
    const double label_score = normal_quantile(static_cast<double>(k + 1) / static_cast<double>(m + 1));
    z[k] = rho * label_score + spread * rng.normal();
  }
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return z[a] < z[b] || (z[a] == z[b] && a < b); });
  std::vector<std::uint32_t> degrees(m);
  for (std::size_t t = 0; t < m; ++t) degrees[order[t]] = draws[t];

  const std::uint64_t sum = std::accumulate(degrees.begin(), degrees.end(), std::uint64_t{0});
  if (sum % 2 == 1) {
    const auto at_min = static_cast<std::size_t>(std::count(degrees.begin(), degrees.end(), p.delta));
    const auto at_max = static_cast<std::size_t>(std::count(degrees.begin(), degrees.end(), p.Delta));
    std::vector<std::size_t> candidates;
    for (std::size_t k = 0; k < m; ++k) {
      if (degrees[k] > p.delta && !(degrees[k] == p.Delta && at_max == 1)) candidates.push_back(k);
    }
    if (!candidates.empty()) {
      --degrees[candidates[static_cast<std::size_t>(rng.below(candidates.size()))]];
    } else {
      for (std::size_t k = 0; k < m; ++k) {
        if (degrees[k] < p.Delta && !(degrees[k] == p.delta && at_min == 1)) candidates.push_back(k);
      }
      if (candidates.empty()) throw InfeasibleError(layer, "degree sum parity cannot be fixed");
      ++degrees[candidates[static_cast<std::size_t>(rng.below(candidates.size()))]];
    }
  }
  return degrees;
}

// ---------------------------------------------------------------------------
// Phase 3

std::vector<std::uint32_t> community_sizes(const LayerParams& p, std::size_t m, Rng& rng, std::size_t layer) {
  if (p.s > m) throw InfeasibleError(layer, "minimum community size exceeds active actors");
  const TruncatedPowerLaw law(p.s, p.S, p.beta);
  std::vector<std::uint32_t> sizes;
  std::size_t total = 0;
  if (p.S <= m) {
    sizes.push_back(p.S);
    total += p.S;
  }
  if (p.s != p.S && total + p.s <= m) {
    sizes.push_back(p.s);
    total += p.s;
  }
  const std::size_t anchors = sizes.size();
  while (total < m) {
    const auto k = law.sample(rng);
    sizes.push_back(k);
    total += k;
  }
  if (total == m) return sizes;

  // Trim the last draw; a remainder below s is spread over communities with room.
  const auto remainder = static_cast<std::uint32_t>(sizes.back() - (total - m));
  if (remainder >= p.s) {
    sizes.back() = remainder;
    return sizes;
  }
  sizes.pop_back();
  std::uint32_t left = remainder;
  auto spread = [&](std::size_t from) {
    bool progress = true;
    while (left > 0 && progress) {
      progress = false;
      for (std::size_t k = from; k < sizes.size() && left > 0; ++k) {
        if (sizes[k] < p.S) {
          ++sizes[k];
          --left;
          progress = true;
        }
      }
    }
  };
  spread(anchors);
  if (left > 0) spread(0);
  if (left == 0) return sizes;

  // Every community is full: form one more community and top it up to s.
  sizes.push_back(left);
  std::size_t need = p.s - left;
  for (std::size_t pass = 0; pass < 2 && need > 0; ++pass) {
    for (std::size_t k = pass == 0 ? anchors : 0; k + 1 < sizes.size() && need > 0; ++k) {
      while (sizes[k] > p.s && need > 0) {
        --sizes[k];
        ++sizes.back();
        --need;
      }
    }
  }
  if (need > 0) throw InfeasibleError(layer, "community sizes in [s, S] cannot cover the active actors");
  return sizes;
}

LayerPartition phase3_communities(const LayerParams& p, std::span<const ActorId> active,
                                  const ReferenceLayer& reference, Rng& rng, std::size_t layer) {
  const std::size_t m = active.size();
  const auto sizes = community_sizes(p, m, rng, layer);
  const std::size_t count = sizes.size();
  const double r = p.r.value_or(0.0);

  std::vector<std::size_t> geometric, random;
  for (std::size_t k = 0; k < m; ++k) (rng.bernoulli(r) ? geometric : random).push_back(k);

  // Geometric quota per community by largest remainder.
  std::vector<std::size_t> quota(count);
  std::vector<std::pair<double, std::size_t>> fractions(count);
  std::size_t assigned = 0;
  for (std::size_t c = 0; c < count; ++c) {
    const double exact = static_cast<double>(sizes[c]) * static_cast<double>(geometric.size()) / static_cast<double>(m);
    quota[c] = static_cast<std::size_t>(std::floor(exact));
    fractions[c] = {exact - static_cast<double>(quota[c]), c};
    assigned += quota[c];
  }
  std::sort(fractions.begin(), fractions.end(),
            [](const auto& x, const auto& y) { return x.first > y.first || (x.first == y.first && x.second < y.second); });
  for (std::size_t t = 0; assigned < geometric.size(); ++t, ++assigned) ++quota[fractions[t % count].second];

  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](auto x, auto y) { return sizes[x] > sizes[y]; });

  std::vector<std::uint32_t> label(m, 0);
  std::vector<std::size_t> pool = geometric;  // positions into `active`, ascending
  std::vector<std::pair<double, std::size_t>> scored;
  for (std::size_t c : order) {
    std::size_t want = quota[c];
    if (want == 0 || pool.empty()) continue;
    const std::size_t seed_slot = static_cast<std::size_t>(rng.below(pool.size()));
    const std::size_t seed = pool[seed_slot];
    label[seed] = static_cast<std::uint32_t>(c);
    pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(seed_slot));
    --want;
    if (want == 0) continue;
    scored.clear();
    for (std::size_t k : pool) scored.emplace_back(reference.squared_distance(active[seed], active[k]), k);
    want = std::min(want, scored.size());
    std::nth_element(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(want - 1), scored.end());
    std::vector<char> taken(m, 0);
    for (std::size_t t = 0; t < want; ++t) {
      label[scored[t].second] = static_cast<std::uint32_t>(c);
      taken[scored[t].second] = 1;
    }
    std::erase_if(pool, [&](std::size_t k) { return taken[k] != 0; });
  }

  std::vector<std::uint32_t> slots;
  for (std::size_t c = 0; c < count; ++c) {
    for (std::size_t t = quota[c]; t < sizes[c]; ++t) slots.push_back(static_cast<std::uint32_t>(c));
  }
  rng.shuffle(std::span(slots));
  for (std::size_t t = 0; t < random.size(); ++t) label[random[t]] = slots[t];

  return LayerPartition(std::vector<ActorId>(active.begin(), active.end()), label);
}

// ---------------------------------------------------------------------------
// Phase 4

EdgePools phase4_edges(std::span<const ActorId> active, std::span<const std::uint32_t> degrees,
                       const LayerPartition& partition, double xi, Rng& rng) {
  if (active.size() != degrees.size() || partition.size() != active.size()) {
    throw std::invalid_argument("phase4_edges: active set, degrees and partition disagree");
  }
  const std::size_t m = active.size();
  const auto sizes = partition.community_sizes();
  const auto labels = partition.labels();

  // Background edges land inside a community with probability about
  // sum_c (vol_c / vol)^2, so the background share is raised to compensate.
  std::vector<double> volume(partition.community_count(), 0.0);
  double total_volume = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    volume[labels[k]] += degrees[k];
    total_volume += degrees[k];
  }
  double inside = 0.0;
  for (double v : volume) inside += total_volume > 0.0 ? (v / total_volume) * (v / total_volume) : 0.0;
  const double background_share = inside < 1.0 ? std::min(1.0, xi / (1.0 - inside)) : 1.0;

  // Actors whose internal demand exceeds their community push the surplus to
  // the background; the share of the others is lowered to keep the total.
  // Internal counts round up or down at random so low degrees keep the share
  // on average; the dither is drawn once so the search below is monotone.
  std::vector<double> dither(m);
  for (auto& u : dither) u = rng.uniform();
  std::vector<std::uint32_t> internal(m), background(m);
  auto split = [&](double share) {
    double total = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
      const auto cap = static_cast<std::uint32_t>(sizes[labels[k]] - 1);
      const auto wanted = static_cast<std::uint32_t>(std::floor((1.0 - share) * degrees[k] + dither[k]));
      internal[k] = std::min(wanted, cap);
      background[k] = degrees[k] - internal[k];
      total += background[k];
    }
    return total;
  };
  const double target = background_share * total_volume;
  double lo = 0.0, hi = background_share;
  for (int step = 0; step < 40 && split(hi) > target + 0.5; ++step) {
    const double mid = 0.5 * (lo + hi);
    (split(mid) > target ? hi : lo) = mid;
  }
  split(hi);

  std::vector<std::vector<std::size_t>> members(partition.community_count());
  for (std::size_t k = 0; k < m; ++k) members[labels[k]].push_back(k);

  EdgePools out;
  std::vector<ActorId> stubs;
  auto match = [&](std::uint32_t pool) {
    rng.shuffle(std::span(stubs));
    for (std::size_t t = 0; t + 1 < stubs.size(); t += 2) out.edges.push_back({stubs[t], stubs[t + 1], pool});
  };

  for (std::size_t c = 0; c < members.size(); ++c) {
    std::uint64_t sum = 0;
    for (auto k : members[c]) sum += internal[k];
    if (sum % 2 == 1) {
      std::vector<std::size_t> holders;
      for (auto k : members[c]) {
        if (internal[k] > 0) holders.push_back(k);
      }
      const auto k = holders[static_cast<std::size_t>(rng.below(holders.size()))];
      --internal[k];
      ++background[k];
      ++out.parity_moves;
    }
    stubs.clear();
    for (auto k : members[c]) stubs.insert(stubs.end(), internal[k], active[k]);
    match(static_cast<std::uint32_t>(c));
  }
  stubs.clear();
  for (std::size_t k = 0; k < m; ++k) stubs.insert(stubs.end(), background[k], active[k]);
  match(PoolEdge::kBackground);
  return out;
}

// ---------------------------------------------------------------------------
// Phase 5

namespace {

std::uint64_t pair_key(ActorId a, ActorId b) {
  return a < b ? (static_cast<std::uint64_t>(a) << 32) | b : (static_cast<std::uint64_t>(b) << 32) | a;
}

}  // namespace

SimplifyResult phase5_simplify(std::vector<PoolEdge> edges, std::size_t actor_count,
                               std::span<const ActorId> active, std::size_t attempts, Rng& rng) {
  SimplifyResult result;
  std::unordered_map<std::uint64_t, std::uint32_t> count;
  count.reserve(edges.size() * 2);
  std::unordered_map<std::uint32_t, std::vector<std::size_t>> pools;
  for (std::size_t e = 0; e < edges.size(); ++e) {
    ++count[pair_key(edges[e].u, edges[e].v)];
    pools[edges[e].pool].push_back(e);
  }
  for (const auto& [key, c] : count) {
    const bool loop = (key >> 32) == (key & 0xffffffffu);
    result.conflicts += loop ? c : c - 1;
  }
  auto in_conflict = [&](std::size_t e) {
    return edges[e].u == edges[e].v || count[pair_key(edges[e].u, edges[e].v)] > 1;
  };

  // Partners come from the edge's own pool first, then from the background
  // (a swap with a background edge adds fewer crossing edges than one with
  // another community's edge), then from the whole layer.
  const std::size_t local_attempts = attempts / 2;
  const std::size_t background_attempts = local_attempts + attempts / 4;
  const auto& background = pools[PoolEdge::kBackground];
  for (std::size_t e = 0; e < edges.size(); ++e) {
    if (!in_conflict(e)) continue;
    const auto& pool = pools[edges[e].pool];
    for (std::size_t t = 0; t < attempts; ++t) {
      std::size_t f;
      if (t < local_attempts && pool.size() > 1) {
        f = pool[static_cast<std::size_t>(rng.below(pool.size()))];
      } else if (t < background_attempts && !background.empty()) {
        f = background[static_cast<std::size_t>(rng.below(background.size()))];
      } else {
        f = static_cast<std::size_t>(rng.below(edges.size()));
      }
      if (f == e) continue;
      const ActorId u = edges[e].u, v = edges[e].v;
      ActorId x = edges[f].u, y = edges[f].v;
      if (rng.bernoulli(0.5)) std::swap(x, y);
      if (u == x || v == y) continue;
      const auto k1 = pair_key(u, x);
      const auto k2 = pair_key(v, y);
      if (k1 == k2) continue;
      if (auto it = count.find(k1); it != count.end() && it->second > 0) continue;
      if (auto it = count.find(k2); it != count.end() && it->second > 0) continue;
      --count[pair_key(u, v)];
      --count[pair_key(edges[f].u, edges[f].v)];
      ++count[k1];
      ++count[k2];
      edges[e].u = u;
      edges[e].v = x;
      edges[f].u = v;
      edges[f].v = y;
      ++result.repaired;
      break;
    }
  }

  std::vector<Edge> simple;
  simple.reserve(edges.size());
  for (const auto& pe : edges) {
    if (pe.u != pe.v) simple.emplace_back(pe.u, pe.v);
  }
  std::sort(simple.begin(), simple.end());
  simple.erase(std::unique(simple.begin(), simple.end()), simple.end());
  result.dropped = edges.size() - simple.size();
  result.layer = Layer(actor_count, std::vector<ActorId>(active.begin(), active.end()), std::move(simple));
  return result;
}

// ---------------------------------------------------------------------------
// Phase 6

CorrelationMatrix edge_correlation_matrix(std::span<const Layer> layers) {
  CorrelationMatrix out(layers.size());
  for (std::size_t i = 0; i < layers.size(); ++i) {
    for (std::size_t j = i + 1; j < layers.size(); ++j) out.set(i, j, edge_correlation(layers[i], layers[j]));
  }
  return out;
}

namespace {

class RewireState {
 public:
  RewireState(const std::vector<Layer>& layers, std::span<const LayerPartition> communities)
      : count_(layers.size()) {
    const std::size_t n = layers.empty() ? 0 : layers[0].actor_count();
    graphs_.resize(count_);
    for (std::size_t i = 0; i < count_; ++i) {
      Graph& g = graphs_[i];
      if (i < communities.size()) {
        g.label.assign(n, kNoCommunity);
        const auto nodes = communities[i].nodes();
        const auto labels = communities[i].labels();
        for (std::size_t k = 0; k < nodes.size(); ++k) g.label[nodes[k]] = labels[k];
      }
      g.active.assign(n, 0);
      for (ActorId a : layers[i].active_nodes()) g.active[a] = 1;
      g.adjacency.resize(n);
      for (const Edge& e : layers[i].edges()) insert_raw(g, e);
    }
    restricted_.assign(count_ * count_, 0);
    shared_.assign(count_ * count_, 0);
    for (std::size_t i = 0; i < count_; ++i) {
      for (const Edge& e : graphs_[i].edges) {
        for (std::size_t k = 0; k < count_; ++k) {
          if (k == i) continue;
          if (graphs_[k].active[e.u] && graphs_[k].active[e.v]) ++restricted_[i * count_ + k];
          if (k > i && graphs_[k].set.contains(pair_key(e.u, e.v))) {
            ++shared_[i * count_ + k];
            ++shared_[k * count_ + i];
          }
        }
      }
    }
  }

  std::optional<double> correlation(std::size_t i, std::size_t j) const {
    const auto denominator = std::min(restricted_[i * count_ + j], restricted_[j * count_ + i]);
    if (denominator <= 0) return std::nullopt;
    return static_cast<double>(shared_[i * count_ + j]) / static_cast<double>(denominator);
  }

  bool has(std::size_t layer, ActorId a, ActorId b) const { return graphs_[layer].set.contains(pair_key(a, b)); }
  bool active(std::size_t layer, ActorId a) const { return graphs_[layer].active[a] != 0; }
  bool shared_elsewhere(std::size_t layer, const Edge& e) const {
    for (std::size_t k = 0; k < count_; ++k) {
      if (k != layer && has(k, e.u, e.v)) return true;
    }
    return false;
  }
  std::size_t edge_count(std::size_t layer) const { return graphs_[layer].edges.size(); }
  /// 1 when the pair crosses communities of `layer`; 0 without labels.
  int crossing(std::size_t layer, ActorId a, ActorId b) const {
    const auto& label = graphs_[layer].label;
    return label.empty() ? 0 : static_cast<int>(label[a] != label[b]);
  }
  const Edge& edge(std::size_t layer, std::size_t index) const { return graphs_[layer].edges[index]; }
  std::span<const ActorId> neighbours(std::size_t layer, ActorId a) const { return graphs_[layer].adjacency[a]; }

  void remove(std::size_t layer, const Edge& e) {
    account(layer, e, -1);
    Graph& g = graphs_[layer];
    const auto key = pair_key(e.u, e.v);
    const std::size_t idx = g.index.at(key);
    const Edge last = g.edges.back();
    g.edges[idx] = last;
    g.index[pair_key(last.u, last.v)] = idx;
    g.edges.pop_back();
    g.index.erase(key);
    g.set.erase(key);
    auto drop = [](std::vector<ActorId>& list, ActorId x) {
      auto it = std::find(list.begin(), list.end(), x);
      *it = list.back();
      list.pop_back();
    };
    drop(g.adjacency[e.u], e.v);
    drop(g.adjacency[e.v], e.u);
  }

  void add(std::size_t layer, const Edge& e) {
    insert_raw(graphs_[layer], e);
    account(layer, e, +1);
  }

  std::vector<Layer> export_layers(const std::vector<Layer>& original) const {
    std::vector<Layer> out;
    for (std::size_t i = 0; i < count_; ++i) {
      std::vector<Edge> edges = graphs_[i].edges;
      const auto active = original[i].active_nodes();
      out.emplace_back(original[i].actor_count(), std::vector<ActorId>(active.begin(), active.end()), std::move(edges));
    }
    return out;
  }

 private:
  static constexpr std::uint32_t kNoCommunity = 0xffffffffu;

  struct Graph {
    std::vector<std::uint32_t> label;  // empty when no partition is known
    std::vector<char> active;
    std::unordered_set<std::uint64_t> set;
    std::unordered_map<std::uint64_t, std::size_t> index;
    std::vector<Edge> edges;
    std::vector<std::vector<ActorId>> adjacency;
  };

  static void insert_raw(Graph& g, const Edge& e) {
    const auto key = pair_key(e.u, e.v);
    g.set.insert(key);
    g.index[key] = g.edges.size();
    g.edges.push_back(e);
    g.adjacency[e.u].push_back(e.v);
    g.adjacency[e.v].push_back(e.u);
  }

  void account(std::size_t layer, const Edge& e, long delta) {
    for (std::size_t k = 0; k < count_; ++k) {
      if (k == layer) continue;
      if (graphs_[k].active[e.u] && graphs_[k].active[e.v]) restricted_[layer * count_ + k] += delta;
      if (graphs_[k].set.contains(pair_key(e.u, e.v))) {
        shared_[layer * count_ + k] += delta;
        shared_[k * count_ + layer] += delta;
      }
    }
  }

  std::size_t count_;
  std::vector<Graph> graphs_;
  std::vector<long> restricted_;
  std::vector<long> shared_;
};

// Copies an edge of `source` into `target` by swapping two target edges.
bool try_raise(RewireState& st, std::size_t target, std::size_t source, Rng& rng) {
  if (st.edge_count(source) == 0) return false;
  const Edge want = st.edge(source, static_cast<std::size_t>(rng.below(st.edge_count(source))));
  const ActorId u = rng.bernoulli(0.5) ? want.u : want.v;
  const ActorId v = u == want.u ? want.v : want.u;
  if (!st.active(target, u) || !st.active(target, v) || st.has(target, u, v)) return false;
  const auto nu = st.neighbours(target, u);
  const auto nv = st.neighbours(target, v);
  if (nu.empty() || nv.empty()) return false;
  const ActorId x = nu[static_cast<std::size_t>(rng.below(nu.size()))];
  const ActorId y = nv[static_cast<std::size_t>(rng.below(nv.size()))];
  if (x == y || x == v || y == u || st.has(target, x, y)) return false;
  const Edge ux(u, x), vy(v, y);
  if (st.shared_elsewhere(target, ux) || st.shared_elsewhere(target, vy)) return false;
  if (st.crossing(target, u, x) + st.crossing(target, v, y) != st.crossing(target, u, v) + st.crossing(target, x, y)) {
    return false;
  }
  st.remove(target, ux);
  st.remove(target, vy);
  st.add(target, Edge(u, v));
  st.add(target, Edge(x, y));
  return true;
}

// Breaks an edge shared by `target` and `other` by swapping it with a private one.
bool try_lower(RewireState& st, std::size_t target, std::size_t other, Rng& rng) {
  const std::size_t m = st.edge_count(target);
  if (m < 2) return false;
  std::optional<Edge> common;
  for (int tries = 0; tries < 32 && !common; ++tries) {
    const Edge e = st.edge(target, static_cast<std::size_t>(rng.below(m)));
    if (st.has(other, e.u, e.v)) common = e;
  }
  if (!common) return false;
  const Edge partner = st.edge(target, static_cast<std::size_t>(rng.below(m)));
  if (st.shared_elsewhere(target, partner)) return false;
  ActorId x = partner.u, y = partner.v;
  if (rng.bernoulli(0.5)) std::swap(x, y);
  const ActorId u = common->u, v = common->v;
  if (u == x || v == y || u == y || v == x) return false;
  const Edge ux(u, x), vy(v, y);
  if (ux == vy || st.has(target, ux.u, ux.v) || st.has(target, vy.u, vy.v)) return false;
  if (st.has(other, ux.u, ux.v) || st.has(other, vy.u, vy.v)) return false;
  if (st.crossing(target, u, v) + st.crossing(target, x, y) != st.crossing(target, u, x) + st.crossing(target, v, y)) {
    return false;
  }
  st.remove(target, *common);
  st.remove(target, partner);
  st.add(target, ux);
  st.add(target, vy);
  return true;
}

}  // namespace

RewireReport phase6_rewire(std::vector<Layer>& layers, std::span<const double> target, const RewireOptions& options,
                           Rng& rng, std::span<const LayerPartition> communities) {
  const std::size_t l = layers.size();
  if (target.size() != l * l) throw std::invalid_argument("phase6_rewire: target must be l x l");
  RewireReport report;
  report.initial = edge_correlation_matrix(layers);
  if (l < 2) {
    report.achieved = report.initial;
    report.converged = true;
    return report;
  }

  RewireState state(layers, communities);
  std::size_t total_edges = 0;
  for (const auto& layer : layers) total_edges += layer.edge_count();
  const auto budget = static_cast<std::size_t>(options.budget_factor * static_cast<double>(total_edges));

  // Pairs are pushed to half the tolerance so the reported residual has margin.
  const double slack = 0.5 * options.tolerance;
  auto off_target = [&](std::size_t i, std::size_t j) -> int {
    const auto r = state.correlation(i, j);
    if (!r) return 0;
    const double t = target[i * l + j];
    if (*r < t - slack) return +1;
    if (*r > t + slack) return -1;
    return 0;
  };

  constexpr std::size_t kBatch = 256;
  while (true) {
    bool pending = false;
    for (std::size_t i = 0; i < l; ++i) {
      for (std::size_t j = i + 1; j < l; ++j) {
        for (std::size_t t = 0; t < kBatch && report.attempts < budget; ++t) {
          const int direction = off_target(i, j);
          if (direction == 0) break;
          pending = true;
          ++report.attempts;
          const bool flip = rng.bernoulli(0.5);
          const std::size_t a = flip ? i : j;
          const std::size_t b = flip ? j : i;
          const bool ok = direction > 0 ? try_raise(state, a, b, rng) : try_lower(state, a, b, rng);
          if (ok) ++report.swaps;
        }
      }
    }
    if (!pending || report.attempts >= budget) break;
  }

  if (report.swaps > 0) layers = state.export_layers(layers);
  report.achieved = edge_correlation_matrix(layers);
  report.converged = true;
  for (std::size_t i = 0; i < l; ++i) {
    for (std::size_t j = i + 1; j < l; ++j) {
      const auto r = report.achieved.at(i, j);
      if (r && std::abs(*r - target[i * l + j]) > options.tolerance) report.converged = false;
    }
  }
  return report;
}

// ---------------------------------------------------------------------------

GeneratedNetwork generate(const MabcdConfig& config, std::uint64_t seed, const GenerateOptions& options) {
  validate(config, Completeness::kComplete);
  const std::size_t n = config.n;
  const std::size_t l = config.layer_count();

  Rng reference_rng(seed, "reference");
  const ReferenceLayer reference(n, *config.d, reference_rng);

  std::vector<Layer> layers(l);
  std::vector<LayerPartition> truth(l);
  std::vector<LayerDiagnostics> diagnostics(l);

  parallel_for(l, options.jobs, [&](std::size_t i) {
    const LayerParams& p = config.layers[i];
    Rng rng_active(seed, "active", i);
    Rng rng_degree(seed, "degree", i);
    Rng rng_community(seed, "community", i);
    Rng rng_edges(seed, "edges", i);
    Rng rng_simplify(seed, "simplify", i);

    const auto active = phase1_active_set(p.q, n, rng_active);
    const auto degrees = phase2_degrees(p, active, rng_degree, i);
    truth[i] = phase3_communities(p, active, reference, rng_community, i);
    auto pools = phase4_edges(active, degrees, truth[i], p.xi, rng_edges);
    auto simple = phase5_simplify(std::move(pools.edges), n, active, options.simplify_attempts, rng_simplify);

    LayerDiagnostics& diag = diagnostics[i];
    diag.active = active.size();
    diag.parity_moves = pools.parity_moves;
    diag.simplify_conflicts = simple.conflicts;
    diag.simplify_dropped = simple.dropped;
    std::size_t crossing = 0;
    for (const Edge& e : simple.layer.edges()) {
      if (truth[i].community_of(e.u) != truth[i].community_of(e.v)) ++crossing;
    }
    diag.xi_before_rewire =
        simple.layer.edge_count() == 0 ? 0.0
                                       : static_cast<double>(crossing) / static_cast<double>(simple.layer.edge_count());
    layers[i] = std::move(simple.layer);
  });

  Rng rewire_rng(seed, "rewire");
  RewireReport rewire = phase6_rewire(layers, config.R, options.rewire, rewire_rng, truth);

  return GeneratedNetwork{MultilayerNetwork(n, std::move(layers)), std::move(truth), std::move(diagnostics),
                          std::move(rewire)};
}

}  // namespace mltwin
