#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

#include "mltwin/config.hpp"
#include "mltwin/generator.hpp"
#include "mltwin/power_law.hpp"
#include "oracles.hpp"

using namespace mltwin;

namespace {

LayerParams layer_params(double q = 1.0) {
  LayerParams p;
  p.q = q;
  p.tau = 0.5;
  p.r = 0.5;
  p.gamma = 2.5;
  p.delta = 4;
  p.Delta = 60;
  p.beta = 1.5;
  p.s = 20;
  p.S = 150;
  p.xi = 0.2;
  return p;
}

MabcdConfig small_config(std::size_t n, std::size_t l, double corr = 0.3) {
  MabcdConfig c;
  c.n = n;
  c.d = 2;
  c.seed = 1;
  c.R = uniform_correlation(l, corr);
  c.layers.assign(l, layer_params());
  return c;
}

std::vector<ActorId> all_actors(std::size_t n) {
  std::vector<ActorId> v(n);
  std::iota(v.begin(), v.end(), 0);
  return v;
}

double ccdf_gap(const std::vector<std::uint32_t>& samples, const TruncatedPowerLaw& law) {
  std::map<std::uint32_t, double> counts;
  for (auto v : samples) counts[v] += 1;
  double acc = 0, worst = 0;
  for (std::uint32_t k = law.min(); k <= law.max(); ++k) {
    acc += counts.count(k) ? counts[k] : 0;
    worst = std::max(worst, std::abs(acc / samples.size() - law.cdf(k)));
  }
  return worst;
}

std::size_t crossing(const Layer& layer, const LayerPartition& p) {
  std::size_t c = 0;
  for (const auto& e : layer.edges()) c += p.community_of(e.u) != p.community_of(e.v);
  return c;
}

}  // namespace

TEST_CASE("config validation and JSON round trip") {
  auto c = small_config(500, 2);
  CHECK_NOTHROW(validate(c));
  CHECK(config_from_json(config_to_json(c), Completeness::kComplete) == c);

  auto bad = c;
  bad.layers[0].gamma = 3.0;
  CHECK_THROWS_AS(validate(bad), ConfigError);
  bad = c;
  bad.layers[1].s = bad.layers[1].delta;
  CHECK_THROWS_AS(validate(bad), ConfigError);
  bad = c;
  bad.layers[0].r.reset();
  CHECK_THROWS_AS(validate(bad), ConfigError);
  CHECK_NOTHROW(validate(bad, Completeness::kPartial));
  bad = c;
  bad.layers[0].Delta = 500;
  CHECK_THROWS_AS(validate(bad), ConfigError);
  bad = c;
  bad.R[1] = 0.4;  // asymmetric
  CHECK_THROWS_AS(validate(bad), ConfigError);

  CHECK(active_target(0.5, 10) == 5);
  CHECK(active_target(0.25, 10) == 2);  // 2.5 rounds to even
  CHECK(active_target(0.35, 10) == 4);  // 3.5 rounds to even
  CHECK(active_target(0.01, 10) == 1);
}

TEST_CASE("truncated power law sampling matches its CDF") {
  const TruncatedPowerLaw law(5, 100, 2.5);
  CHECK(law.cdf(100) == doctest::Approx(1.0));
  double total = 0;
  for (std::uint32_t k = 5; k <= 100; ++k) total += law.pmf(k);
  CHECK(total == doctest::Approx(1.0));
  Rng rng(2);
  std::vector<std::uint32_t> samples(100000);
  for (auto& s : samples) s = law.sample(rng);
  CHECK(ccdf_gap(samples, law) <= 0.01);
  CHECK(*std::min_element(samples.begin(), samples.end()) >= 5);
  CHECK(*std::max_element(samples.begin(), samples.end()) <= 100);
}

TEST_CASE("phase 1 selects the rounded count uniformly") {
  Rng rng(1);
  CHECK(phase1_active_set(1.0, 10, rng) == all_actors(10));
  std::vector<int> hits(10, 0);
  const int runs = 10000;
  for (int t = 0; t < runs; ++t) {
    const auto a = phase1_active_set(0.5, 10, rng);
    REQUIRE(a.size() == 5);
    CHECK(std::is_sorted(a.begin(), a.end()));
    for (auto x : a) ++hits[x];
  }
  const double sigma = std::sqrt(runs * 0.25);
  for (int h : hits) CHECK(std::abs(h - runs * 0.5) <= 3 * sigma);
}

TEST_CASE("phase 2 degrees: support, parity, endpoints and distribution") {
  auto p = layer_params();
  p.delta = 5;
  p.Delta = 100;
  p.tau = 0.0;
  Rng rng(4);
  const auto active = all_actors(100000);
  const auto deg = phase2_degrees(p, active, rng);
  REQUIRE(deg.size() == active.size());
  CHECK(std::accumulate(deg.begin(), deg.end(), std::uint64_t{0}) % 2 == 0);
  CHECK(*std::min_element(deg.begin(), deg.end()) == 5);
  CHECK(*std::max_element(deg.begin(), deg.end()) == 100);
  CHECK(ccdf_gap(deg, TruncatedPowerLaw(5, 100, 2.5)) <= 0.01);
}

TEST_CASE("phase 2 copula coupling") {
  auto p = layer_params();
  const auto active = all_actors(3000);
  std::vector<double> labels(active.begin(), active.end());

  p.tau = 1.0;
  Rng rng(5);
  const auto sorted = phase2_degrees(p, active, rng);
  // Perfect coupling up to the parity fix on a single actor.
  std::size_t descents = 0;
  for (std::size_t k = 1; k < sorted.size(); ++k) descents += sorted[k] < sorted[k - 1];
  CHECK(descents <= 2);

  p.tau = 0.0;
  double sum = 0;
  for (int seed = 0; seed < 50; ++seed) {
    Rng r(100 + seed);
    const auto deg = phase2_degrees(p, active, r);
    const std::vector<double> d(deg.begin(), deg.end());
    const double t = *kendall_tau(labels, d);
    CHECK(std::abs(t) <= 0.05);
    sum += t;
  }
  CHECK(std::abs(sum / 50) <= 0.01);

  double previous = -2;
  for (double tau : {-1.0, -0.5, 0.0, 0.5, 1.0}) {
    p.tau = tau;
    Rng r(7);
    const auto deg = phase2_degrees(p, active, r);
    const double t = *kendall_tau(labels, std::vector<double>(deg.begin(), deg.end()));
    CHECK(t >= previous);
    previous = t;
  }
}

TEST_CASE("community sizes: range, sum and distribution") {
  auto p = layer_params();
  p.s = 10;
  p.S = 100;
  Rng rng(6);
  const auto sizes = community_sizes(p, 4000000, rng);
  CHECK(std::accumulate(sizes.begin(), sizes.end(), std::uint64_t{0}) == 4000000);
  CHECK(*std::min_element(sizes.begin(), sizes.end()) >= 10);
  CHECK(*std::max_element(sizes.begin(), sizes.end()) <= 100);
  CHECK(sizes.size() >= 100000);
  CHECK(ccdf_gap(sizes, TruncatedPowerLaw(10, 100, 1.5)) <= 0.02);

  for (std::size_t m : {20u, 21u, 39u, 150u, 151u, 977u}) {
    auto q = layer_params();
    Rng r(m);
    const auto small = community_sizes(q, m, r);
    CHECK(std::accumulate(small.begin(), small.end(), std::size_t{0}) == m);
    for (auto s : small) {
      CHECK(s >= q.s);
      CHECK(s <= q.S);
    }
  }
  auto q = layer_params();
  Rng r(1);
  CHECK_THROWS_AS(community_sizes(q, 19, r), InfeasibleError);
}

TEST_CASE("phase 3 partitions the active set") {
  auto p = layer_params();
  Rng ref_rng(1);
  const ReferenceLayer reference(2000, 2, ref_rng);
  for (std::size_t k = 0; k < 2000; ++k) {
    for (double x : reference.point(static_cast<ActorId>(k))) {
      CHECK(x >= 0.0);
      CHECK(x <= 1.0);
    }
  }
  Rng rng(3);
  const auto active = phase1_active_set(0.7, 2000, rng);
  const auto part = phase3_communities(p, active, reference, rng);
  CHECK(part.size() == active.size());
  for (auto s : part.community_sizes()) {
    CHECK(s >= p.s);
    CHECK(s <= p.S);
  }

  p.s = p.S = static_cast<std::uint32_t>(active.size());
  CHECK(phase3_communities(p, active, reference, rng).community_count() == 1);
}

TEST_CASE("phase 3 geometric assignment correlates layers") {
  // Ground-truth AMI between two fully active layers must grow with r.
  const std::size_t n = 1500;
  const auto active = all_actors(n);
  std::map<double, double> mean_ami;
  for (double r : {0.0, 0.5, 1.0}) {
    auto p = layer_params();
    p.r = r;
    double sum = 0;
    for (int seed = 0; seed < 10; ++seed) {
      Rng ref_rng(seed, "reference");
      const ReferenceLayer reference(n, 2, ref_rng);
      Rng a(seed, "a"), b(seed, "b");
      sum += adjusted_mutual_information(phase3_communities(p, active, reference, a),
                                         phase3_communities(p, active, reference, b));
    }
    mean_ami[r] = sum / 10;
  }
  CHECK(mean_ami[0.0] <= mean_ami[0.5]);
  CHECK(mean_ami[0.5] <= mean_ami[1.0]);
  CHECK(std::abs(mean_ami[0.0]) < 0.05);
  CHECK(mean_ami[1.0] > 0.5);
}

TEST_CASE("phase 4 conserves stubs and respects the noise level") {
  auto p = layer_params();
  const std::size_t n = 3000;
  const auto active = all_actors(n);
  Rng rng(9);
  Rng ref_rng(1);
  const ReferenceLayer reference(n, 2, ref_rng);
  const auto deg = phase2_degrees(p, active, rng);
  const auto part = phase3_communities(p, active, reference, rng);

  {
    Rng r(1);
    const auto pools = phase4_edges(active, deg, part, 0.2, r);
    CHECK(2 * pools.edges.size() == std::accumulate(deg.begin(), deg.end(), std::size_t{0}));
    std::vector<std::uint32_t> recount(n, 0);
    for (const auto& e : pools.edges) {
      ++recount[e.u];
      ++recount[e.v];
      if (e.pool != PoolEdge::kBackground) {
        CHECK(part.community_of(e.u) == e.pool);
        CHECK(part.community_of(e.v) == e.pool);
      }
    }
    CHECK(recount == deg);
    double cross = 0;
    for (const auto& e : pools.edges) cross += part.community_of(e.u) != part.community_of(e.v);
    CHECK(cross / pools.edges.size() == doctest::Approx(0.2).epsilon(0.15));
  }
  {
    // Communities larger than the maximum degree and no noise: no background.
    auto q = p;
    q.s = 100;
    q.S = 200;
    Rng r(2), c(3);
    const auto big = phase3_communities(q, active, reference, c);
    const auto pools = phase4_edges(active, deg, big, 1e-9, r);
    std::size_t background = 0;
    for (const auto& e : pools.edges) background += e.pool == PoolEdge::kBackground;
    CHECK(background <= pools.parity_moves);
  }
  {
    // Pure background: the inside fraction is what random matching gives.
    Rng r(4);
    const auto pools = phase4_edges(active, deg, part, 0.999, r);
    std::vector<double> vol(part.community_count(), 0.0);
    double total = 0;
    for (std::size_t k = 0; k < n; ++k) {
      vol[part.labels()[k]] += deg[k];
      total += deg[k];
    }
    double expected = 0;
    for (double v : vol) expected += (v / total) * (v / total);
    double inside = 0;
    for (const auto& e : pools.edges) inside += part.community_of(e.u) == part.community_of(e.v);
    CHECK(inside / pools.edges.size() == doctest::Approx(expected).epsilon(0.5));
  }
}

TEST_CASE("phase 5 simplification") {
  Rng rng(1);
  const std::vector<ActorId> act{0, 1, 2, 3};
  {
    std::vector<PoolEdge> edges{{0, 1, 0}, {1, 2, 0}, {2, 3, 0}};
    const auto out = phase5_simplify(edges, 4, act, 100, rng);
    CHECK(out.layer.edge_count() == 3);
    CHECK(out.conflicts == 0);
    CHECK(out.repaired == 0);
  }
  {
    const auto out = phase5_simplify({{0, 0, 0}}, 4, act, 100, rng);
    CHECK(out.layer.edge_count() == 0);
    CHECK(out.dropped == 1);
    CHECK(out.layer.active_count() == 4);
  }
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<PoolEdge> edges;
    std::vector<std::uint32_t> target(100, 0);
    for (int e = 0; e < 300; ++e) {
      const auto u = static_cast<ActorId>(rng.below(100));
      const auto v = static_cast<ActorId>(rng.below(100));
      edges.push_back({u, v, PoolEdge::kBackground});
      ++target[u];
      ++target[v];
    }
    const auto out = phase5_simplify(edges, 100, all_actors(100), 100, rng);
    std::uint64_t l1 = 0;
    for (std::size_t k = 0; k < 100; ++k) {
      l1 += static_cast<std::uint64_t>(std::abs(static_cast<long>(target[k]) - static_cast<long>(out.layer.degrees()[k])));
    }
    CHECK(l1 <= 2 * out.dropped);
    CHECK(out.layer.edge_count() + out.dropped == 300);
  }
}

TEST_CASE("phase 6 rewiring") {
  Rng rng(1);
  {
    std::vector<Layer> layers{oracle::random_layer(200, 0.05, rng), oracle::random_layer(200, 0.05, rng)};
    const double initial = *edge_correlation(layers[0], layers[1]);
    const auto before = layers;
    const auto report = phase6_rewire(layers, uniform_correlation(2, initial), {}, rng);
    CHECK(report.swaps == 0);
    CHECK(report.converged);
    CHECK(std::equal(layers[0].edges().begin(), layers[0].edges().end(), before[0].edges().begin(),
                     before[0].edges().end()));
  }
  {
    const Layer same = oracle::random_layer(200, 0.05, rng);
    std::vector<Layer> layers{same, same};
    const auto report = phase6_rewire(layers, uniform_correlation(2, 1.0), {}, rng);
    CHECK(report.swaps == 0);
    CHECK(report.achieved.at(0, 1) == 1.0);
  }
  for (int seed = 0; seed < 10; ++seed) {
    Rng r(seed, "rewire-test");
    std::vector<Layer> layers{oracle::random_layer(500, 0.02, r), oracle::random_layer(500, 0.02, r)};
    const auto deg0 = layers[0].degrees();
    const auto report = phase6_rewire(layers, uniform_correlation(2, 0.3), {}, r);
    CHECK(std::abs(*report.achieved.at(0, 1) - 0.3) <= 0.05);
    CHECK(*edge_correlation(layers[0], layers[1]) == *report.achieved.at(0, 1));
    CHECK(layers[0].degrees() == deg0);
    CHECK(report.converged);
  }
}

TEST_CASE("generate: determinism and structural guarantees") {
  auto c = small_config(2000, 3);
  c.layers[1].q = 0.6;
  c.layers[2].q = 0.8;
  const auto a = generate(c, 42);
  const auto b = generate(c, 42);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(std::equal(a.network.layer(i).edges().begin(), a.network.layer(i).edges().end(),
                     b.network.layer(i).edges().begin(), b.network.layer(i).edges().end()));
    CHECK(a.ground_truth[i] == b.ground_truth[i]);
  }
  GenerateOptions threaded;
  threaded.jobs = 3;
  const auto t = generate(c, 42, threaded);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(std::equal(a.network.layer(i).edges().begin(), a.network.layer(i).edges().end(),
                     t.network.layer(i).edges().begin(), t.network.layer(i).edges().end()));
  }
  const auto other = generate(c, 43);
  CHECK_FALSE(std::equal(a.network.layer(0).edges().begin(), a.network.layer(0).edges().end(),
                         other.network.layer(0).edges().begin(), other.network.layer(0).edges().end()));

  for (std::size_t i = 0; i < 3; ++i) {
    const auto& layer = a.network.layer(i);
    const auto& p = c.layers[i];
    CHECK(layer.active_count() == active_target(p.q, c.n));
    std::size_t low = 0;
    for (ActorId v : layer.active_nodes()) {
      CHECK(layer.degrees()[v] <= p.Delta);
      low += layer.degrees()[v] < p.delta;
    }
    CHECK(low <= 2 * a.layers[i].simplify_dropped);
    for (auto s : a.ground_truth[i].community_sizes()) {
      CHECK(s >= p.s);
      CHECK(s <= p.S);
    }
    CHECK(std::abs(a.layers[i].xi_before_rewire - p.xi) <= 0.05);
    // Rewiring keeps the ground-truth crossing count.
    const double after = static_cast<double>(crossing(layer, a.ground_truth[i])) / layer.edge_count();
    CHECK(after == doctest::Approx(a.layers[i].xi_before_rewire).epsilon(0.02));
  }
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = i + 1; j < 3; ++j) CHECK(std::abs(*a.rewire.achieved.at(i, j) - 0.3) <= 0.05);
  }
}

TEST_CASE("generate: full activity and the noiseless limit") {
  // Communities larger than the maximum degree, so no internal degree is capped.
  auto c = small_config(2000, 2, 0.2);
  for (auto& p : c.layers) {
    p.xi = 0.001;
    p.s = 70;
    p.S = 200;
  }
  const auto g = generate(c, 5);
  for (std::size_t i = 0; i < 2; ++i) {
    const auto& layer = g.network.layer(i);
    CHECK(layer.active_count() == 2000);
    CHECK(static_cast<double>(crossing(layer, g.ground_truth[i])) / layer.edge_count() <= 0.01);
  }
}

TEST_CASE("generate: infeasible configurations name the layer") {
  auto c = small_config(100, 2);
  for (auto& p : c.layers) {
    p.Delta = 15;
    p.S = 50;
  }
  c.layers[1].q = 0.1;  // 10 active actors, smaller than s
  try {
    generate(c, 1);
    FAIL("expected infeasibility");
  } catch (const InfeasibleError& e) {
    CHECK(e.layer() == 1);
  }
  auto unset = small_config(100, 2);
  unset.d.reset();
  CHECK_THROWS_AS(generate(unset, 1), ConfigError);
}

TEST_CASE("generate: three-layer benchmark shape") {
  MabcdConfig c;
  c.n = 3492;
  c.d = 2;
  c.R = uniform_correlation(3, 0.2);
  for (double q : {3479.0 / 3492, 2091.0 / 3492, 1865.0 / 3492}) {
    auto p = layer_params(q);
    c.layers.push_back(p);
  }
  const auto g = generate(c, 1);
  CHECK(g.network.layer(0).active_count() == 3479);
  CHECK(g.network.layer(1).active_count() == 2091);
  CHECK(g.network.layer(2).active_count() == 1865);
}

TEST_CASE("normal quantile") {
  CHECK(normal_quantile(0.5) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-9));
  CHECK(normal_quantile(1e-6) == doctest::Approx(-4.753424308822899).epsilon(1e-9));
}
