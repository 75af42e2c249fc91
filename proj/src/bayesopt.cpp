#include "mltwin/bayesopt.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "mltwin/text.hpp"

namespace mltwin {

void SearchSpace::validate() const {
  if (dims.empty()) throw std::invalid_argument("search space has no dimensions");
  for (const auto& d : dims) {
    if (!std::isfinite(d.lower) || !std::isfinite(d.upper) || !(d.lower < d.upper)) {
      throw std::invalid_argument("dimension " + d.name + " needs finite bounds with lower < upper");
    }
  }
}

std::vector<double> SearchSpace::to_unit(std::span<const double> point) const {
  std::vector<double> u(dims.size());
  for (std::size_t k = 0; k < dims.size(); ++k) u[k] = (point[k] - dims[k].lower) / (dims[k].upper - dims[k].lower);
  return u;
}

std::vector<double> SearchSpace::from_unit(std::span<const double> unit) const {
  std::vector<double> p(dims.size());
  for (std::size_t k = 0; k < dims.size(); ++k) {
    p[k] = std::clamp(dims[k].lower + unit[k] * (dims[k].upper - dims[k].lower), dims[k].lower, dims[k].upper);
  }
  return p;
}

std::vector<std::vector<double>> latin_hypercube(std::size_t n, std::size_t dims, Rng& rng) {
  std::vector<std::vector<double>> points(n, std::vector<double>(dims));
  std::vector<std::size_t> strata(n);
  for (std::size_t d = 0; d < dims; ++d) {
    std::iota(strata.begin(), strata.end(), std::size_t{0});
    rng.shuffle(std::span(strata));
    for (std::size_t k = 0; k < n; ++k) {
      points[k][d] = (static_cast<double>(strata[k]) + rng.uniform()) / static_cast<double>(n);
    }
  }
  return points;
}

std::vector<double> acquire(const GaussianProcess& gp, std::size_t dims, double best, Rng& rng,
                            const OptimizeOptions& options) {
  auto ei = [&](const std::vector<double>& u) {
    const auto p = gp.predict(u);
    return expected_improvement(p.mean, p.variance, best);
  };
  std::vector<std::pair<double, std::vector<double>>> pool;
  pool.reserve(options.candidates);
  for (std::size_t c = 0; c < options.candidates; ++c) {
    std::vector<double> u(dims);
    for (double& x : u) x = rng.uniform();
    const double value = ei(u);
    pool.emplace_back(value, std::move(u));
  }
  const std::size_t keep = std::min(options.refine, pool.size());
  std::partial_sort(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(keep), pool.end(),
                    [](const auto& a, const auto& b) { return a.first > b.first; });

  // Compass search from the most promising candidates.
  std::pair<double, std::vector<double>> winner = pool.front();
  for (std::size_t c = 0; c < keep; ++c) {
    auto [value, u] = pool[c];
    double step = 0.05;
    for (int it = 0; it < 40 && step > 1e-4; ++it) {
      bool moved = false;
      for (std::size_t d = 0; d < dims && !moved; ++d) {
        for (double sign : {1.0, -1.0}) {
          std::vector<double> trial = u;
          trial[d] = std::clamp(trial[d] + sign * step, 0.0, 1.0);
          if (trial[d] == u[d]) continue;
          const double v = ei(trial);
          if (v > value) {
            value = v;
            u = std::move(trial);
            moved = true;
            break;
          }
        }
      }
      if (!moved) step *= 0.5;
    }
    if (value > winner.first) winner = {value, u};
  }
  return winner.second;
}

OptimizationTrace optimize(const SearchSpace& space, const ObjectiveFunction& objective, const OptimizeOptions& options,
                           Rng& rng, const TraceSink& sink) {
  space.validate();
  if (options.init < 2) throw std::invalid_argument("initial design needs at least two points");
  if (options.budget < options.init) throw std::invalid_argument("budget must be at least the initial design size");
  const std::size_t dims = space.size();

  OptimizationTrace trace;
  for (const auto& d : space.dims) trace.names.push_back(d.name);
  trace.best_loss = std::numeric_limits<double>::infinity();

  std::vector<std::vector<double>> unit_points;
  std::vector<double> losses;
  const auto start = std::chrono::steady_clock::now();

  auto evaluate = [&](std::vector<double> unit) {
    const auto point = space.from_unit(unit);
    const double loss = objective(point);
    unit_points.push_back(std::move(unit));
    losses.push_back(loss);
    if (loss < trace.best_loss) {
      trace.best_loss = loss;
      trace.best_point = point;
    }
    TraceRecord record;
    record.iteration = losses.size();
    record.point = point;
    record.loss = loss;
    record.best = trace.best_loss;
    record.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    trace.records.push_back(record);
    if (sink) sink(record);
  };

  for (auto& u : latin_hypercube(options.init, dims, rng)) evaluate(std::move(u));

  while (losses.size() < options.budget) {
    std::vector<double> next;
    try {
      const auto gp = GaussianProcess::fit(unit_points, losses);
      double incumbent = std::numeric_limits<double>::infinity();
      for (const auto& u : unit_points) incumbent = std::min(incumbent, gp.predict(u).mean);
      next = acquire(gp, dims, incumbent, rng, options);
    } catch (const GpError&) {
      next.resize(dims);
      for (double& x : next) x = rng.uniform();
    }
    evaluate(std::move(next));
  }
  return trace;
}

std::string trace_csv_header(std::span<const std::string> names) {
  std::string line = "iteration";
  for (const auto& n : names) line += "," + n;
  return line + ",loss_instant,loss_best,wall_ms";
}

std::string trace_csv_row(const TraceRecord& r) {
  std::string line = std::to_string(r.iteration);
  for (double x : r.point) line += "," + format_number(x);
  char wall[32];
  std::snprintf(wall, sizeof wall, "%.3f", r.wall_ms);
  return line + "," + format_number(r.loss) + "," + format_number(r.best) + "," + wall;
}

}  // namespace mltwin
