#include "mltwin/pipeline.hpp"

#include "mltwin/generator.hpp"
#include "mltwin/parallel.hpp"
#include "mltwin/rng.hpp"
#include "mltwin/text.hpp"

namespace mltwin {

FitResult fit_extracted(const ExtractionResult& extraction, const FitOptions& options, const TraceSink& sink) {
  if (extraction.config.layer_count() < 2) throw ValidationError("fitting needs at least two layers");
  Objective obj;
  obj.loss = options.loss;
  obj.vars = options.vars;
  obj.twins = options.twins;
  obj.base = extraction.config;
  obj.base.d = options.d;
  for (auto& layer : obj.base.layers) {
    if (!layer.r) layer.r = 0.5;
  }
  obj.target = extraction.observed;
  obj.base_seed = derive_seed(options.seed, "twins");
  obj.jobs = options.jobs;
  validate(obj.base, Completeness::kComplete);

  const SearchSpace space = make_search_space(options.vars, obj.base.layer_count());
  Rng rng(options.seed, "optimize");
  FitResult out;
  out.trace = optimize(
      space, [&](std::span<const double> point) { return evaluate_objective(point, obj).loss; }, options.optimizer,
      rng, sink);
  out.fitted = apply_point(obj.base, options.vars, out.trace.best_point);
  out.fitted.seed = options.seed;
  return out;
}

TwinEvaluation evaluate_twins(const MultilayerNetwork& original, const NetworkSummary& original_summary,
                              const MabcdConfig& config, std::size_t count, std::uint64_t seed, unsigned jobs) {
  TwinEvaluation out;
  out.reports.resize(count);
  parallel_for(count, jobs, [&](std::size_t k) {
    const auto twin = generate(config, seed + k);
    out.reports[k] = full_report(original, original_summary, summarize(twin.network), config);
  });
  out.mean = mean_report(out.reports);
  return out;
}

NetworkSummary summary_from_extraction(const ExtractionResult& extraction) {
  NetworkSummary s;
  s.partitions = extraction.partitions;
  s.matrices = extraction.observed;
  for (const auto& p : extraction.config.layers) s.xi.push_back(p.xi);
  return s;
}

std::vector<SweepRow> sweep_dimensions(const MultilayerNetwork& net, const ExtractionResult& extraction,
                                       const NetworkSummary& summary, const SweepOptions& options,
                                       const SweepSink& sink) {
  std::vector<SweepRow> rows(options.dims.size());
  const std::uint64_t eval_seed = derive_seed(options.fit.seed, "evaluate");
  for (std::size_t k = 0; k < options.dims.size(); ++k) {
    SweepRow& row = rows[k];
    row.d = options.dims[k];
    try {
      FitOptions fit = options.fit;
      fit.d = row.d;
      row.fit = fit_extracted(extraction, fit);
      row.mean = evaluate_twins(net, summary, row.fit->fitted, options.eval_twins, eval_seed, options.fit.jobs).mean;
      row.ok = true;
    } catch (const std::exception& e) {
      row.ok = false;
      row.error = e.what();
    }
    if (sink) sink(row);
  }
  return rows;
}

std::string sweep_csv_header() { return "d,status,best_loss,D_R,D_tau,D_r,D_gamma,D_beta,D_xi"; }

std::string sweep_csv_row(const SweepRow& row) {
  const DivergenceReport& m = row.mean;
  const std::string best = row.fit ? format_number(row.fit->trace.best_loss) : std::string();
  return std::to_string(row.d) + "," + (row.ok ? "ok" : "failed") + "," + best + "," + format_optional(m.D_R) + "," +
         format_optional(m.D_tau) + "," + format_optional(m.D_r) + "," + format_optional(m.D_gamma) + "," +
         format_optional(m.D_beta) + "," + format_optional(m.D_xi);
}

}  // namespace mltwin
