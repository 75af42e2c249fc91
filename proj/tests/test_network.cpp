#include <doctest.h>

#include <sstream>

#include "mltwin/network.hpp"
#include "oracles.hpp"

using namespace mltwin;

namespace {

LoadedNetwork parse(const std::string& text, LoadOptions options = {}) {
  std::istringstream in(text);
  return read_network(in, options);
}

}  // namespace

TEST_CASE("layer normalises edges and derives degrees") {
  Layer layer(4, {}, {{2, 1}, {1, 2}, {0, 3}});
  CHECK(layer.edge_count() == 2);
  CHECK(layer.has_edge(1, 2));
  CHECK(layer.has_edge(3, 0));
  CHECK_FALSE(layer.has_edge(0, 1));
  CHECK(layer.active_count() == 4);
  CHECK(layer.degrees() == DegreeSequence{1, 1, 1, 1});
  CHECK_THROWS_AS(Layer(3, {}, {{1, 1}}), ValidationError);
  CHECK_THROWS_AS(Layer(3, {}, {{0, 5}}), ValidationError);
}

TEST_CASE("triangle and path degrees") {
  const MultilayerNetwork tri(3, {Layer(3, {}, {{0, 1}, {1, 2}, {0, 2}})});
  CHECK(layer_degree(tri, 0) == DegreeSequence{2, 2, 2});
  const MultilayerNetwork path(3, {Layer(3, {}, {{0, 1}, {1, 2}})});
  CHECK(layer_degree(path, 0) == DegreeSequence{1, 2, 1});
  CHECK_THROWS_AS(layer_degree(path, 1), std::out_of_range);
}

TEST_CASE("total degree: inactive actor and additivity") {
  std::vector<Layer> layers;
  for (int i = 0; i < 3; ++i) layers.emplace_back(4, std::vector<ActorId>{}, std::vector<Edge>{{0, 1}, {1, 2}, {0, 2}});
  const MultilayerNetwork net(4, layers);
  const auto total = total_degree(net);
  CHECK(total[3] == 0);
  CHECK(total[0] == 6);
}

TEST_CASE("total degree equals the sum of per-layer recounts") {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Layer> layers;
    for (int i = 0; i < 2; ++i) layers.push_back(oracle::random_layer(10, 0.3, rng, 0.8));
    const MultilayerNetwork net(10, layers);
    std::vector<std::uint32_t> recount(10, 0);
    for (const auto& layer : net.layers()) {
      std::size_t sum = 0;
      for (const auto& e : layer.edges()) {
        ++recount[e.u];
        ++recount[e.v];
        sum += 2;
      }
      std::size_t degree_sum = 0;
      for (auto d : layer.degrees()) degree_sum += d;
      CHECK(degree_sum == sum);
    }
    CHECK(total_degree(net) == recount);
  }
}

TEST_CASE("common active actors") {
  auto range = [](ActorId lo, ActorId hi) {
    std::vector<ActorId> v;
    for (ActorId a = lo; a <= hi; ++a) v.push_back(a);
    return v;
  };
  const MultilayerNetwork net(10, {Layer(10, range(0, 4), {}), Layer(10, range(3, 7), {}), Layer(10, range(0, 4), {}),
                                   Layer(10, range(8, 9), {})});
  CHECK(common_active(net, 0, 1) == std::vector<ActorId>{3, 4});
  CHECK(common_active(net, 0, 2) == range(0, 4));
  CHECK(common_active(net, 0, 3).empty());
}

TEST_CASE("edge correlation of hand-built layers") {
  const Layer i(4, {0, 1, 2, 3}, {{0, 1}, {1, 2}, {0, 2}});
  const Layer j(4, {0, 1, 2, 3}, {{0, 1}, {2, 3}});
  CHECK(edge_correlation(i, j).value() == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(edge_correlation(i, i).value() == 1.0);
  const Layer k(4, {0, 1, 2, 3}, {{0, 3}, {1, 3}});
  CHECK(edge_correlation(i, k).value() == 0.0);
  const Layer empty(4, {0, 1}, {});
  CHECK_FALSE(edge_correlation(i, empty).has_value());
}

TEST_CASE("parser: headers, comments, CRLF, active lines") {
  const auto loaded = parse(
      "# a comment\r\n#actors 6\r\n#layers 2\r\n#active 1 6\r\n1 1 2 # trailing\r\n1 2 3\r\n\r\n2 4 5\r\n");
  const auto& net = loaded.network;
  CHECK(net.actor_count() == 6);
  CHECK(net.layer_count() == 2);
  CHECK(net.layer(0).edge_count() == 2);
  CHECK(net.layer(0).is_active(5));
  CHECK(net.layer(0).degrees()[5] == 0);
  CHECK(net.layer(0).active_count() == 4);
  CHECK(net.layer(1).active_count() == 2);
}

TEST_CASE("parser: empty layer keeps declared actors") {
  const auto net = parse("#actors 3\n#layers 2\n#active 2 1 2 3\n1 1 2\n").network;
  CHECK(net.layer(1).edge_count() == 0);
  CHECK(net.layer(1).active_count() == 3);
  CHECK(layer_degree(net, 1) == DegreeSequence{0, 0, 0});
}

TEST_CASE("parser: duplicates collapse, self-loops drop, both counted") {
  const auto loaded = parse("#actors 5\n#layers 1\n1 2 5\n1 5 2\n1 2 5\n1 3 3\n");
  CHECK(loaded.network.layer(0).edge_count() == 1);
  CHECK(loaded.report.duplicate_edges_dropped == 2);
  CHECK(loaded.report.self_loops_dropped == 1);
}

TEST_CASE("parser: errors carry line numbers") {
  try {
    parse("#actors 3\n#layers 1\n1 1 2\n1 x 2\n");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 4);
  }
  CHECK_THROWS_AS(parse("#actors 3\n#layers 1\n1 1\n"), ParseError);
  CHECK_THROWS_AS(parse("#actors 3\n#layers 1\n1 1 4\n"), ValidationError);
  CHECK_THROWS_AS(parse("#actors 3\n#layers 1\n2 1 2\n"), ValidationError);
  CHECK_THROWS_AS(parse("1 1 2\n"), ParseError);
}

TEST_CASE("parser: relabelling arbitrary tokens") {
  LoadOptions options;
  options.relabel = true;
  const auto loaded = parse("#layers 2\n1 alice bob\n2 bob carol\n1 carol alice\n", options);
  CHECK(loaded.network.actor_count() == 3);
  CHECK(loaded.external_ids == std::vector<std::string>{"alice", "bob", "carol"});
  CHECK(loaded.network.layer(1).has_edge(1, 2));
}

TEST_CASE("write then read reproduces the network") {
  Rng rng(5);
  std::vector<Layer> layers;
  for (int i = 0; i < 3; ++i) layers.push_back(oracle::random_layer(40, 0.1, rng, 0.7));
  const MultilayerNetwork net(40, layers);
  std::stringstream buffer;
  write_network(buffer, net);
  const auto back = read_network(buffer).network;
  REQUIRE(back.layer_count() == 3);
  CHECK(back.actor_count() == 40);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(std::equal(back.layer(i).active_nodes().begin(), back.layer(i).active_nodes().end(),
                     net.layer(i).active_nodes().begin(), net.layer(i).active_nodes().end()));
    CHECK(std::equal(back.layer(i).edges().begin(), back.layer(i).edges().end(), net.layer(i).edges().begin(),
                     net.layer(i).edges().end()));
  }
}

TEST_CASE("large three-layer file with isolated declared actors") {
  // Same shape as the public three-layer benchmark: 3492 actors, layer
  // sizes 3479 / 2091 / 1865.
  std::ostringstream text;
  text << "#actors 3492\n#layers 3\n";
  const std::size_t sizes[3] = {3479, 2091, 1865};
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t a = 1; a <= sizes[i]; ++a) text << "#active " << i + 1 << ' ' << a << '\n';
    for (std::size_t a = 1; a + 1 <= sizes[i]; a += 2) text << i + 1 << ' ' << a << ' ' << a + 1 << '\n';
  }
  const auto net = parse(text.str()).network;
  CHECK(net.layer_count() == 3);
  CHECK(net.actor_count() == 3492);
  CHECK(net.layer(0).active_count() == 3479);
  CHECK(net.layer(1).active_count() == 2091);
  CHECK(net.layer(2).active_count() == 1865);
}
