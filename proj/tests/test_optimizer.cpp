#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "mltwin/bayesopt.hpp"
#include "mltwin/estimators.hpp"
#include "mltwin/generator.hpp"
#include "mltwin/gp.hpp"
#include "mltwin/objective.hpp"

using namespace mltwin;

namespace {

MabcdConfig target_config(double r) {
  MabcdConfig c;
  c.n = 800;
  c.d = 2;
  c.R = uniform_correlation(2, 0.3);
  for (int i = 0; i < 2; ++i) {
    LayerParams p;
    p.q = 1.0;
    p.tau = 0.5;
    p.r = r;
    p.gamma = 2.5;
    p.delta = 4;
    p.Delta = 50;
    p.beta = 1.5;
    p.s = 20;
    p.S = 120;
    p.xi = 0.2;
    c.layers.push_back(p);
  }
  return c;
}

Objective make_objective(const MabcdConfig& truth, Loss loss) {
  const auto original = generate(truth, 99).network;
  std::vector<LayerPartition> parts;
  for (const auto& layer : original.layers()) parts.push_back(greedy_modularity(layer).partition);
  Objective obj;
  obj.loss = loss;
  obj.base = truth;
  obj.target = observed_matrices(original, parts);
  obj.base_seed = 1000;
  return obj;
}

double quadratic(std::span<const double> x) { return (x[0] - 0.3) * (x[0] - 0.3); }

}  // namespace

TEST_CASE("GP interpolates noiseless data") {
  std::vector<std::vector<double>> x;
  std::vector<double> y;
  for (int k = 0; k < 8; ++k) {
    const double t = k / 14.0;
    x.push_back({t});
    y.push_back((t - 0.4) * (t - 0.4));
  }
  const auto gp = GaussianProcess::fit(x, y);
  REQUIRE(gp.hyper().noise < 1e-6);
  for (int k = 0; k < 8; ++k) CHECK(std::abs(gp.predict(x[k]).mean - y[k]) <= 1e-6);
  // Observations cover [0, 0.5]; the farthest point of the box is 1.
  CHECK(gp.predict(x[3]).variance <= gp.predict(std::vector<double>{1.0}).variance);
  CHECK(gp.predict(x[3]).variance <= 1e-6);
}

TEST_CASE("contradictory observations force a noise term") {
  std::vector<std::vector<double>> x{{0.2}, {0.2}, {0.7}};
  std::vector<double> y{0.0, 1.0, 0.5};
  const auto gp = GaussianProcess::fit(x, y);
  CHECK(gp.hyper().noise > 1e-3);
}

TEST_CASE("GP needs two observations and survives duplicates") {
  CHECK_THROWS(GaussianProcess::fit({{0.5}}, std::vector<double>{1.0}));
  std::vector<std::vector<double>> x{{0.5}, {0.5}};
  CHECK_NOTHROW(GaussianProcess::with_hyper(x, std::vector<double>{1.0, 1.0}, GpHyper{1.0, 0.3, 1e-10}));
}

TEST_CASE("expected improvement") {
  CHECK(expected_improvement(0.0, 0.0, 0.0) == 0.0);
  CHECK(expected_improvement(1.0, 0.0, 0.5) == 0.0);
  CHECK(expected_improvement(0.2, 0.0, 0.5) == doctest::Approx(0.3));
  CHECK(expected_improvement(0.5, 0.04, 0.5) == doctest::Approx(0.2 / std::sqrt(2 * M_PI)).epsilon(1e-12));
  CHECK(expected_improvement(0.6, 0.01, 0.5) > 0.0);

  // EI vanishes at a noiseless optimum and is positive where variance remains.
  std::vector<std::vector<double>> x{{0.0}, {0.3}, {1.0}};
  std::vector<double> y{0.09, 0.0, 0.49};
  const auto gp = GaussianProcess::with_hyper(x, y, GpHyper{1.0, 0.3, 1e-10});
  const auto at = gp.predict(x[1]);
  CHECK(expected_improvement(at.mean, at.variance, 0.0) <= 1e-6);
  const auto between = gp.predict(std::vector<double>{0.65});
  CHECK(between.variance > 0.0);
  CHECK(expected_improvement(between.mean, between.variance, 0.0) > 0.0);
}

TEST_CASE("latin hypercube has one point per stratum") {
  Rng rng(3);
  const auto pts = latin_hypercube(10, 3, rng);
  REQUIRE(pts.size() == 10);
  for (std::size_t d = 0; d < 3; ++d) {
    std::vector<int> strata(10, 0);
    for (const auto& p : pts) ++strata[static_cast<std::size_t>(p[d] * 10)];
    for (int s : strata) CHECK(s == 1);
  }
}

TEST_CASE("search space mapping") {
  const auto space = make_search_space(Variables::kRTau, 3);
  REQUIRE(space.size() == 6);
  CHECK(space.dims[0].name == "r1");
  CHECK(space.dims[5].name == "tau3");
  CHECK(space.dims[5].lower == -1.0);
  const std::vector<double> point{0.2, 0.4, 0.6, -0.5, 0.0, 1.0};
  const auto unit = space.to_unit(point);
  CHECK(unit[3] == doctest::Approx(0.25));
  const auto back = space.from_unit(unit);
  for (std::size_t k = 0; k < 6; ++k) CHECK(back[k] == doctest::Approx(point[k]));
  CHECK_THROWS_AS(SearchSpace{}.validate(), std::invalid_argument);
  SearchSpace bad{{{"x", 1.0, 0.0}}};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  const auto c = apply_point(target_config(0.1), Variables::kRTau, std::vector<double>{0.3, 0.7, -0.2, 0.9});
  CHECK(*c.layers[1].r == 0.7);
  CHECK(c.layers[0].tau == -0.2);
  CHECK_THROWS_AS(apply_point(c, Variables::kR, std::vector<double>{0.1}), std::invalid_argument);

  CHECK(parse_loss("mean") == Loss::kMean);
  CHECK_FALSE(parse_loss("rms").has_value());
  CHECK(parse_variables("r,tau") == Variables::kRTau);
  CHECK_FALSE(parse_variables("tau").has_value());
}

TEST_CASE("optimiser finds a noiseless quadratic minimum") {
  const SearchSpace space{{{"x", 0.0, 1.0}}};
  OptimizeOptions options;
  options.budget = 25;
  options.init = 6;
  int hits = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed, "quadratic");
    const auto trace = optimize(space, quadratic, options, rng);
    hits += std::abs(trace.best_point[0] - 0.3) <= 0.05;
    REQUIRE(trace.records.size() == 25);
    for (std::size_t k = 1; k < trace.records.size(); ++k) {
      CHECK(trace.records[k].best <= trace.records[k - 1].best);
      CHECK(trace.records[k].iteration == k + 1);
    }
    for (const auto& r : trace.records) {
      CHECK(r.point[0] >= 0.0);
      CHECK(r.point[0] <= 1.0);
    }
    CHECK(trace.best_loss == trace.records.back().best);
  }
  CHECK(hits >= 9);
}

TEST_CASE("late acquisitions concentrate near the optimum") {
  const SearchSpace space{{{"x", 0.0, 1.0}}};
  OptimizeOptions options;
  options.budget = 30;
  options.init = 6;
  Rng rng(5);
  const auto trace = optimize(space, quadratic, options, rng);
  double early = 0, late = 0;
  for (std::size_t k = 0; k < 6; ++k) early += std::abs(trace.records[k].point[0] - 0.3);
  for (std::size_t k = 24; k < 30; ++k) late += std::abs(trace.records[k].point[0] - 0.3);
  CHECK(late < early);
}

TEST_CASE("optimiser determinism, degenerate schedule and sink") {
  const SearchSpace space{{{"a", 0.0, 1.0}, {"b", -1.0, 1.0}}};
  auto f = [](std::span<const double> x) { return std::sin(3 * x[0]) + x[1] * x[1]; };
  OptimizeOptions options;
  options.budget = 12;
  options.init = 4;
  Rng a(1), b(1);
  std::vector<TraceRecord> seen;
  const auto ta = optimize(space, f, options, a, [&](const TraceRecord& r) { seen.push_back(r); });
  const auto tb = optimize(space, f, options, b);
  REQUIRE(ta.records.size() == tb.records.size());
  for (std::size_t k = 0; k < ta.records.size(); ++k) {
    CHECK(ta.records[k].point == tb.records[k].point);
    CHECK(ta.records[k].loss == tb.records[k].loss);
  }
  CHECK(seen.size() == ta.records.size());

  options.budget = options.init = 5;
  Rng c(2);
  const auto random = optimize(space, f, options, c);
  CHECK(random.records.size() == 5);

  options.init = 1;
  CHECK_THROWS_AS(optimize(space, f, options, c), std::invalid_argument);

  CHECK(trace_csv_header(ta.names) == "iteration,a,b,loss_instant,loss_best,wall_ms");
  const auto row = trace_csv_row(ta.records[0]);
  CHECK(row.rfind("1,", 0) == 0);
  CHECK(std::count(row.begin(), row.end(), ',') == 5);
}

TEST_CASE("objective: penalties, loss combination, determinism") {
  const auto truth = target_config(0.8);
  auto obj = make_objective(truth, Loss::kMean);
  obj.twins = 2;
  const std::vector<double> point{0.8, 0.8};
  const auto e = evaluate_objective(point, obj);
  REQUIRE(e.D_r.has_value());
  REQUIRE(e.D_tau.has_value());
  CHECK(e.loss == doctest::Approx((*e.D_r + *e.D_tau) / 2).epsilon(1e-14));
  CHECK_FALSE(e.infeasible);
  CHECK(evaluate_objective(point, obj).loss == e.loss);

  obj.loss = Loss::kR;
  const auto only_r = evaluate_objective(point, obj);
  CHECK(only_r.loss == *e.D_r);
  CHECK_FALSE(only_r.D_tau.has_value());

  auto broken = obj;
  broken.base.layers[0].q = 0.01;  // 8 active actors cannot host a community of 20
  const auto penalised = evaluate_objective(point, broken);
  CHECK(penalised.infeasible);
  CHECK(penalised.loss == 1.0);

  obj.twins = 0;
  CHECK_THROWS_AS(evaluate_objective(point, obj), std::invalid_argument);
}

TEST_CASE("objective is lower at the true r than far from it") {
  const auto truth = target_config(0.8);
  auto obj = make_objective(truth, Loss::kR);
  double near = 0, far = 0;
  for (int rep = 0; rep < 5; ++rep) {
    obj.base_seed = 2000 + 100 * rep;
    near += evaluate_objective(std::vector<double>{0.8, 0.8}, obj).loss;
    far += evaluate_objective(std::vector<double>{0.3, 0.3}, obj).loss;
  }
  CHECK(near < far);
}
