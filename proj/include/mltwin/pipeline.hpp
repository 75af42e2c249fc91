#pragma once

// End-to-end runners shared by the command-line tool and the experiments:
// extract -> fit -> generate twins -> diverge, and the dimension sweep.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mltwin/bayesopt.hpp"
#include "mltwin/divergence.hpp"
#include "mltwin/estimators.hpp"
#include "mltwin/objective.hpp"

namespace mltwin {

struct FitOptions {
  Variables vars = Variables::kR;
  Loss loss = Loss::kR;
  std::size_t d = 2;
  OptimizeOptions optimizer;
  std::size_t twins = 3;
  std::uint64_t seed = 0;
  unsigned jobs = 1;
};

struct FitResult {
  /// Extraction output with r (and tau when searched) and d filled in.
  MabcdConfig fitted;
  OptimizationTrace trace;
};

/// Seeds: the optimiser draws from Rng(seed, "optimize"); twins inside the
/// objective use derive_seed(seed, "twins") + k.
FitResult fit_extracted(const ExtractionResult& extraction, const FitOptions& options, const TraceSink& sink = {});

struct TwinEvaluation {
  std::vector<DivergenceReport> reports;
  DivergenceReport mean;
};

/// Generates `count` twins of `config` with seeds seed+0..seed+count-1 and
/// scores each against the original.
TwinEvaluation evaluate_twins(const MultilayerNetwork& original, const NetworkSummary& original_summary,
                              const MabcdConfig& config, std::size_t count, std::uint64_t seed, unsigned jobs = 1);

struct SweepOptions {
  std::vector<std::size_t> dims{1, 2, 4, 8};
  FitOptions fit;  // d is overridden per entry
  std::size_t eval_twins = 10;
};

struct SweepRow {
  std::size_t d = 0;
  bool ok = false;
  std::string error;
  std::optional<FitResult> fit;
  DivergenceReport mean;
};

/// Per-d progress hook, called after each entry finishes (in d order).
using SweepSink = std::function<void(const SweepRow&)>;

/// One fit per d (common seed), each followed by twin evaluation. A failing
/// entry is recorded and the sweep continues.
std::vector<SweepRow> sweep_dimensions(const MultilayerNetwork& net, const ExtractionResult& extraction,
                                       const NetworkSummary& summary, const SweepOptions& options,
                                       const SweepSink& sink = {});

/// "d,status,best_loss,D_R,D_tau,D_r,D_gamma,D_beta,D_xi"
std::string sweep_csv_header();
std::string sweep_csv_row(const SweepRow& row);

/// Summary of the original derived from an extraction (no second detection pass).
NetworkSummary summary_from_extraction(const ExtractionResult& extraction);

}  // namespace mltwin
