#include "mltwin/network.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace mltwin {

Layer::Layer(std::size_t actor_count, std::vector<ActorId> active, std::vector<Edge> edges)
    : mask_(actor_count, 0), degrees_(actor_count, 0) {
  for (ActorId a : active) {
    if (a >= actor_count) throw ValidationError("actor id out of range");
    mask_[a] = 1;
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  for (const Edge& e : edges) {
    if (e.v >= actor_count) throw ValidationError("actor id out of range");
    if (e.u == e.v) throw ValidationError("self-loop in simple layer");
    mask_[e.u] = 1;
    mask_[e.v] = 1;
    ++degrees_[e.u];
    ++degrees_[e.v];
  }
  edges_ = std::move(edges);
  for (std::size_t a = 0; a < actor_count; ++a) {
    if (mask_[a]) active_.push_back(static_cast<ActorId>(a));
  }
}

bool Layer::has_edge(ActorId a, ActorId b) const {
  return std::binary_search(edges_.begin(), edges_.end(), Edge(a, b));
}

std::vector<ActorId> Layer::positive_degree_nodes() const {
  std::vector<ActorId> out;
  for (ActorId a : active_) {
    if (degrees_[a] > 0) out.push_back(a);
  }
  return out;
}

MultilayerNetwork::MultilayerNetwork(std::size_t actor_count, std::vector<Layer> layers)
    : actor_count_(actor_count), layers_(std::move(layers)) {
  if (actor_count_ == 0) throw ValidationError("network needs at least one actor");
  if (layers_.empty()) throw ValidationError("network needs at least one layer");
  for (const Layer& l : layers_) {
    if (l.actor_count() != actor_count_) throw ValidationError("layer actor count mismatch");
  }
}

const Layer& MultilayerNetwork::layer(std::size_t i) const {
  if (i >= layers_.size()) throw std::out_of_range("layer index out of range");
  return layers_[i];
}

DegreeSequence layer_degree(const MultilayerNetwork& net, std::size_t i) {
  return net.layer(i).degrees();
}

DegreeSequence total_degree(const MultilayerNetwork& net) {
  DegreeSequence total(net.actor_count(), 0);
  for (const Layer& l : net.layers()) {
    const auto& deg = l.degrees();
    for (std::size_t a = 0; a < total.size(); ++a) total[a] += deg[a];
  }
  return total;
}

std::vector<ActorId> common_active(const MultilayerNetwork& net, std::size_t i, std::size_t j) {
  const Layer& a = net.layer(i);
  const Layer& b = net.layer(j);
  std::vector<ActorId> out;
  std::set_intersection(a.active_nodes().begin(), a.active_nodes().end(),
                        b.active_nodes().begin(), b.active_nodes().end(),
                        std::back_inserter(out));
  return out;
}

std::optional<double> edge_correlation(const Layer& a, const Layer& b) {
  std::size_t restricted_a = 0;
  std::size_t shared = 0;
  for (const Edge& e : a.edges()) {
    if (!b.is_active(e.u) || !b.is_active(e.v)) continue;
    ++restricted_a;
    if (b.has_edge(e.u, e.v)) ++shared;
  }
  std::size_t restricted_b = 0;
  for (const Edge& e : b.edges()) {
    if (a.is_active(e.u) && a.is_active(e.v)) ++restricted_b;
  }
  const std::size_t denominator = std::min(restricted_a, restricted_b);
  if (denominator == 0) return std::nullopt;
  return static_cast<double>(shared) / static_cast<double>(denominator);
}

// ---------------------------------------------------------------------------

NetworkBuilder::NetworkBuilder(std::size_t actor_count, std::size_t layer_count)
    : actor_count_(actor_count), active_(layer_count), edges_(layer_count) {}

void NetworkBuilder::check(std::size_t layer, ActorId actor) const {
  if (layer >= edges_.size()) throw ValidationError("layer index out of range");
  if (actor >= actor_count_) throw ValidationError("actor id out of range");
}

void NetworkBuilder::add_active(std::size_t layer, ActorId actor) {
  check(layer, actor);
  active_[layer].push_back(actor);
}

bool NetworkBuilder::add_edge(std::size_t layer, ActorId a, ActorId b) {
  check(layer, a);
  check(layer, b);
  if (a == b) {
    ++report_.self_loops_dropped;
    return false;
  }
  edges_[layer].emplace_back(a, b);
  return true;
}

MultilayerNetwork NetworkBuilder::build() {
  std::vector<Layer> layers;
  layers.reserve(edges_.size());
  for (std::size_t i = 0; i < edges_.size(); ++i) {
    auto& edges = edges_[i];
    std::sort(edges.begin(), edges.end());
    const auto before = edges.size();
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    report_.duplicate_edges_dropped += before - edges.size();
    layers.emplace_back(actor_count_, std::move(active_[i]), std::move(edges));
  }
  return MultilayerNetwork(actor_count_, std::move(layers));
}

// ---------------------------------------------------------------------------

namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> tokens;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
    if (j > i) tokens.push_back(line.substr(i, j - i));
    i = j;
  }
  return tokens;
}

std::uint64_t parse_uint(std::string_view token, std::size_t line_no, const char* what) {
  std::uint64_t value = 0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size()) {
    throw ParseError(std::string("expected non-negative integer for ") + what + ", got '" +
                         std::string(token) + "'",
                     line_no);
  }
  return value;
}

class ActorResolver {
 public:
  ActorResolver(bool relabel) : relabel_(relabel) {}

  void set_declared(std::size_t n) { declared_ = n; }

  ActorId resolve(std::string_view token, std::size_t line_no) {
    if (!relabel_) {
      const auto id = parse_uint(token, line_no, "actor id");
      if (id < 1 || id > declared_) {
        throw ValidationError("line " + std::to_string(line_no) + ": actor id " +
                              std::string(token) + " out of range [1, " +
                              std::to_string(declared_) + "]");
      }
      return static_cast<ActorId>(id - 1);
    }
    auto [it, inserted] = ids_.try_emplace(std::string(token), static_cast<ActorId>(names_.size()));
    if (inserted) {
      names_.emplace_back(token);
      if (declared_ != 0 && names_.size() > declared_) {
        throw ValidationError("line " + std::to_string(line_no) +
                              ": more distinct actors than declared by #actors");
      }
    }
    return it->second;
  }

  std::size_t actor_count() const {
    return relabel_ ? std::max(declared_, names_.size()) : declared_;
  }

  std::vector<std::string> names() const {
    std::vector<std::string> out = names_;
    // Declared actors that never appear get synthetic tokens.
    for (std::size_t i = out.size(); i < actor_count(); ++i) out.push_back("#" + std::to_string(i + 1));
    return out;
  }

 private:
  bool relabel_;
  std::size_t declared_ = 0;
  std::unordered_map<std::string, ActorId> ids_;
  std::vector<std::string> names_;
};

struct PendingActive {
  std::size_t layer;
  ActorId actor;
};

}  // namespace

LoadedNetwork read_network(std::istream& in, const LoadOptions& options) {
  std::size_t declared_actors = 0;
  std::size_t declared_layers = 0;
  ActorResolver resolver(options.relabel);
  std::vector<PendingActive> active;
  struct PendingEdge {
    std::size_t layer;
    ActorId a, b;
  };
  std::vector<PendingEdge> edges;

  auto require_header = [&](std::size_t line_no) {
    if (declared_layers == 0) throw ParseError("missing '#layers' header before data", line_no);
    if (!options.relabel && declared_actors == 0) {
      throw ParseError("missing '#actors' header before data", line_no);
    }
  };
  auto parse_layer = [&](std::string_view token, std::size_t line_no) {
    const auto layer = parse_uint(token, line_no, "layer");
    if (layer < 1 || layer > declared_layers) {
      throw ValidationError("line " + std::to_string(line_no) + ": layer " + std::string(token) +
                            " out of range [1, " + std::to_string(declared_layers) + "]");
    }
    return static_cast<std::size_t>(layer - 1);
  };

  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    const auto tokens_all = split_ws(line);
    if (tokens_all.empty()) continue;

    if (tokens_all[0].front() == '#') {
      const auto head = tokens_all[0];
      if (head == "#actors") {
        if (tokens_all.size() < 2) throw ParseError("'#actors' needs a count", line_no);
        declared_actors = parse_uint(tokens_all[1], line_no, "#actors");
        if (declared_actors == 0) throw ParseError("'#actors' must be positive", line_no);
        resolver.set_declared(declared_actors);
      } else if (head == "#layers") {
        if (tokens_all.size() < 2) throw ParseError("'#layers' needs a count", line_no);
        declared_layers = parse_uint(tokens_all[1], line_no, "#layers");
        if (declared_layers == 0) throw ParseError("'#layers' must be positive", line_no);
      } else if (head == "#active") {
        require_header(line_no);
        if (tokens_all.size() < 2) throw ParseError("'#active' needs a layer", line_no);
        const auto layer = parse_layer(tokens_all[1], line_no);
        for (std::size_t t = 2; t < tokens_all.size(); ++t) {
          if (tokens_all[t].front() == '#') break;
          active.push_back({layer, resolver.resolve(tokens_all[t], line_no)});
        }
      }
      continue;  // any other '#' line is a comment
    }

    std::vector<std::string_view> tokens;
    for (auto t : tokens_all) {
      if (t.front() == '#') break;
      tokens.push_back(t);
    }
    if (tokens.size() != 3) {
      throw ParseError("expected '<layer> <src> <dst>', got " + std::to_string(tokens.size()) +
                           " fields",
                       line_no);
    }
    require_header(line_no);
    const auto layer = parse_layer(tokens[0], line_no);
    const ActorId a = resolver.resolve(tokens[1], line_no);
    const ActorId b = resolver.resolve(tokens[2], line_no);
    edges.push_back({layer, a, b});
  }
  if (declared_layers == 0) throw ParseError("missing '#layers' header", line_no);
  if (resolver.actor_count() == 0) throw ParseError("missing '#actors' header", line_no);

  NetworkBuilder builder(resolver.actor_count(), declared_layers);
  for (const auto& p : active) builder.add_active(p.layer, p.actor);
  for (const auto& e : edges) builder.add_edge(e.layer, e.a, e.b);
  MultilayerNetwork net = builder.build();

  LoadedNetwork out{std::move(net), builder.report(), {}};
  if (options.relabel) out.external_ids = resolver.names();
  return out;
}

LoadedNetwork load_network(const std::filesystem::path& path, const LoadOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open network file: " + path.string());
  return read_network(in, options);
}

void write_network(std::ostream& out, const MultilayerNetwork& net) {
  out << "#actors " << net.actor_count() << '\n';
  out << "#layers " << net.layer_count() << '\n';
  constexpr std::size_t kIdsPerLine = 32;
  for (std::size_t i = 0; i < net.layer_count(); ++i) {
    const auto active = net.layer(i).active_nodes();
    for (std::size_t k = 0; k < active.size(); k += kIdsPerLine) {
      out << "#active " << (i + 1);
      for (std::size_t t = k; t < std::min(active.size(), k + kIdsPerLine); ++t) {
        out << ' ' << (active[t] + 1);
      }
      out << '\n';
    }
  }
  for (std::size_t i = 0; i < net.layer_count(); ++i) {
    for (const Edge& e : net.layer(i).edges()) {
      out << (i + 1) << ' ' << (e.u + 1) << ' ' << (e.v + 1) << '\n';
    }
  }
}

void save_network(const std::filesystem::path& path, const MultilayerNetwork& net) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write network file: " + path.string());
  write_network(out, net);
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

void save_id_map(const std::filesystem::path& path, std::span<const std::string> external_ids) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write id map: " + path.string());
  for (std::size_t i = 0; i < external_ids.size(); ++i) {
    out << (i + 1) << ' ' << external_ids[i] << '\n';
  }
}

}  // namespace mltwin
