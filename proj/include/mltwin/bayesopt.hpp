#pragma once

// Sequential Bayesian optimisation: Latin-hypercube start, then one
// expected-improvement acquisition per iteration on a refitted GP.

#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "mltwin/gp.hpp"
#include "mltwin/rng.hpp"

namespace mltwin {

struct Dimension {
  std::string name;
  double lower = 0.0;
  double upper = 1.0;
};

struct SearchSpace {
  std::vector<Dimension> dims;

  std::size_t size() const { return dims.size(); }
  /// Throws std::invalid_argument unless non-empty with finite ordered bounds.
  void validate() const;
  std::vector<double> to_unit(std::span<const double> point) const;
  std::vector<double> from_unit(std::span<const double> unit) const;
};

struct TraceRecord {
  std::size_t iteration = 0;  // 1-based
  std::vector<double> point;
  double loss = 0.0;
  double best = 0.0;
  double wall_ms = 0.0;
};

struct OptimizationTrace {
  std::vector<std::string> names;
  std::vector<TraceRecord> records;
  std::vector<double> best_point;
  double best_loss = 0.0;
};

struct OptimizeOptions {
  std::size_t budget = 48;
  std::size_t init = 12;
  std::size_t candidates = 1024;
  std::size_t refine = 8;
};

using ObjectiveFunction = std::function<double(std::span<const double>)>;
using TraceSink = std::function<void(const TraceRecord&)>;

/// n points in [0, 1]^D, one per stratum in every coordinate.
std::vector<std::vector<double>> latin_hypercube(std::size_t n, std::size_t dims, Rng& rng);

/// Maximiser of expected improvement over [0, 1]^D against `best`.
std::vector<double> acquire(const GaussianProcess& gp, std::size_t dims, double best, Rng& rng,
                            const OptimizeOptions& options = {});

/// Minimises `objective`. `sink` sees every record as soon as it exists.
/// Requires init >= 2 and budget >= init.
OptimizationTrace optimize(const SearchSpace& space, const ObjectiveFunction& objective, const OptimizeOptions& options,
                           Rng& rng, const TraceSink& sink = {});

/// "iteration,<names>,loss_instant,loss_best,wall_ms"
std::string trace_csv_header(std::span<const std::string> names);
std::string trace_csv_row(const TraceRecord& record);

}  // namespace mltwin
