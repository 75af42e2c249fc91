// mltwin: command-line front end for extraction, generation, fitting,
// divergence scoring and the dimension sweep.
//
// Exit codes: 0 success, 1 I/O or parse error, 2 validation error,
// 3 generator infeasibility.

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mltwin/config.hpp"
#include "mltwin/divergence.hpp"
#include "mltwin/estimators.hpp"
#include "mltwin/generator.hpp"
#include "mltwin/network.hpp"
#include "mltwin/pipeline.hpp"

namespace fs = std::filesystem;
using namespace mltwin;

namespace {

constexpr const char* kVersion = "0.1.0";

enum ExitCode { kOk = 0, kIoError = 1, kValidationError = 2, kInfeasible = 3 };

/// A flag value that parsed but is not acceptable; reported with usage text.
class UsageError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buffer[32];
  std::strftime(buffer, sizeof buffer, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buffer;
}

void write_atomic(const fs::path& path, const std::string& content) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    if (!out.flush()) throw std::runtime_error("cannot write " + tmp.string());
  }
  fs::rename(tmp, path);
}

/// Recorded next to every output so a run can be repeated exactly.
class RunManifest {
 public:
  RunManifest(std::string subcommand, int argc, char** argv) : started_(utc_now()) {
    doc_["tool"] = "mltwin";
    doc_["version"] = kVersion;
    doc_["subcommand"] = std::move(subcommand);
    auto args = nlohmann::ordered_json::array();
    for (int k = 0; k < argc; ++k) args.push_back(argv[k]);
    doc_["argv"] = std::move(args);
    doc_["flags"] = nlohmann::ordered_json::object();
    doc_["inputs"] = nlohmann::ordered_json::array();
    doc_["outputs"] = nlohmann::ordered_json::array();
  }

  template <class T>
  void flag(const std::string& name, const T& value) {
    doc_["flags"][name] = value;
  }
  void input(const fs::path& p) { doc_["inputs"].push_back(p.string()); }
  void output(const fs::path& p) { doc_["outputs"].push_back(p.string()); }

  void write(const fs::path& dir) {
    doc_["started"] = started_;
    doc_["finished"] = utc_now();
    write_atomic(dir / "manifest.json", doc_.dump(2) + "\n");
  }

 private:
  nlohmann::ordered_json doc_;
  std::string started_;
};

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + dir.string() + ": " + ec.message());
}

LoadedNetwork load_checked(const fs::path& path, bool relabel) {
  auto loaded = load_network(path, LoadOptions{relabel});
  if (loaded.report.self_loops_dropped > 0) {
    std::cerr << "warning: " << path.string() << ": dropped " << loaded.report.self_loops_dropped << " self-loops\n";
  }
  if (loaded.report.duplicate_edges_dropped > 0) {
    std::cerr << "warning: " << path.string() << ": collapsed " << loaded.report.duplicate_edges_dropped
              << " duplicate edges\n";
  }
  return loaded;
}

void print_warnings(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
}

std::string layer_file(const std::string& stem, std::size_t layer) {
  return stem + ".layer" + std::to_string(layer + 1) + ".partition";
}

struct Common {
  std::uint64_t seed = 0;
  unsigned jobs = 1;
  std::string out = ".";
  bool relabel = false;
};

void add_common(CLI::App* cmd, Common& c, bool with_seed = true) {
  if (with_seed) cmd->add_option("--seed", c.seed, "Base random seed")->capture_default_str();
  cmd->add_option("--jobs", c.jobs, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_option("--out", c.out, "Output directory")->capture_default_str();
}

// ---------------------------------------------------------------------------

int cmd_extract(const std::string& network, const Common& c, RunManifest& manifest) {
  const fs::path out(c.out);
  ensure_dir(out);
  manifest.input(network);
  manifest.flag("seed", c.seed);
  manifest.flag("relabel", c.relabel);
  const auto loaded = load_checked(network, c.relabel);
  std::cerr << "extracting " << network << " (n=" << loaded.network.actor_count()
            << ", l=" << loaded.network.layer_count() << ")\n";
  const auto result = extract(loaded.network, c.seed, c.jobs);
  print_warnings(result.warnings);

  const fs::path config = out / "config.json";
  write_atomic(config, extraction_to_json(result) + "\n");
  manifest.output(config);
  for (std::size_t i = 0; i < result.partitions.size(); ++i) {
    const fs::path p = out / layer_file("detected", i);
    save_partition(p, result.partitions[i]);
    manifest.output(p);
  }
  if (c.relabel) {
    save_id_map(out / "id_map.txt", loaded.external_ids);
    manifest.output(out / "id_map.txt");
  }
  manifest.write(out);
  std::cout << config.string() << "\n";
  return kOk;
}

int cmd_generate(const std::string& config_path, std::optional<std::uint64_t> seed, std::size_t count,
                 const Common& c, RunManifest& manifest) {
  const fs::path out(c.out);
  const MabcdConfig config = load_config(config_path, Completeness::kComplete);
  ensure_dir(out);
  const std::uint64_t base = seed.value_or(config.seed);
  manifest.input(config_path);
  manifest.flag("seed", base);
  manifest.flag("count", count);
  GenerateOptions options;
  options.jobs = c.jobs;
  for (std::size_t k = 0; k < count; ++k) {
    const auto twin = generate(config, base + k, options);
    char stem[32];
    std::snprintf(stem, sizeof stem, "twin_%03zu", k);
    const fs::path net = out / (std::string(stem) + ".txt");
    save_network(net, twin.network);
    manifest.output(net);
    for (std::size_t i = 0; i < twin.ground_truth.size(); ++i) {
      const fs::path p = out / layer_file(stem, i);
      save_partition(p, twin.ground_truth[i]);
      manifest.output(p);
    }
    std::cerr << "generated " << net.string() << " (seed " << base + k << ", rewiring "
              << (twin.rewire.converged ? "converged" : "stopped at budget") << ")\n";
  }
  manifest.write(out);
  std::cout << out.string() << "\n";
  return kOk;
}

struct FitFlags {
  std::string vars = "r";
  std::string loss = "r";
  std::size_t d = 2;
  std::size_t budget = 48;
  std::size_t init = 12;
  std::size_t twins = 3;
};

FitOptions to_fit_options(const FitFlags& f, const Common& c) {
  const auto vars = parse_variables(f.vars);
  if (!vars) throw UsageError("--vars must be 'r' or 'r,tau'");
  const auto loss = parse_loss(f.loss);
  if (!loss) throw UsageError("--loss must be one of r, tau, mean");
  if (f.d < 1) throw UsageError("--d must be positive");
  if (f.init < 2) throw UsageError("--init must be at least 2");
  if (f.budget < f.init) throw UsageError("--budget must be at least --init");
  if (f.twins < 1) throw UsageError("--twins must be positive");
  FitOptions o;
  o.vars = *vars;
  o.loss = *loss;
  o.d = f.d;
  o.optimizer.budget = f.budget;
  o.optimizer.init = f.init;
  o.twins = f.twins;
  o.seed = c.seed;
  o.jobs = c.jobs;
  return o;
}

void record_fit_flags(RunManifest& manifest, const FitFlags& f, const Common& c) {
  manifest.flag("seed", c.seed);
  manifest.flag("vars", f.vars);
  manifest.flag("loss", f.loss);
  manifest.flag("budget", f.budget);
  manifest.flag("init", f.init);
  manifest.flag("twins", f.twins);
  manifest.flag("relabel", c.relabel);
}

/// Writes rows as they arrive so an interrupted run leaves a readable trace.
class TraceWriter {
 public:
  TraceWriter(const fs::path& path, std::span<const std::string> names) : out_(path, std::ios::binary) {
    if (!out_) throw std::runtime_error("cannot write " + path.string());
    out_ << trace_csv_header(names) << '\n' << std::flush;
  }
  void operator()(const TraceRecord& r) { out_ << trace_csv_row(r) << '\n' << std::flush; }

 private:
  std::ofstream out_;
};

int cmd_fit(const std::string& network, const FitFlags& flags, const Common& c, RunManifest& manifest) {
  const FitOptions options = to_fit_options(flags, c);
  const fs::path out(c.out);
  ensure_dir(out);
  manifest.input(network);
  record_fit_flags(manifest, flags, c);
  manifest.flag("d", flags.d);
  const auto loaded = load_checked(network, c.relabel);
  const auto extraction = extract(loaded.network, c.seed, c.jobs);
  print_warnings(extraction.warnings);
  write_atomic(out / "extraction.json", extraction_to_json(extraction) + "\n");
  manifest.output(out / "extraction.json");

  const auto names = make_search_space(options.vars, extraction.config.layer_count());
  std::vector<std::string> labels;
  for (const auto& d : names.dims) labels.push_back(d.name);
  TraceWriter trace(out / "trace.csv", labels);
  manifest.output(out / "trace.csv");
  const auto result = fit_extracted(extraction, options, [&](const TraceRecord& r) {
    trace(r);
    std::cerr << "iteration " << r.iteration << "/" << options.optimizer.budget << " loss " << r.loss << " best "
              << r.best << "\n";
  });
  const fs::path fitted = out / "fitted.json";
  write_atomic(fitted, config_to_json(result.fitted) + "\n");
  manifest.output(fitted);
  manifest.write(out);
  std::cout << fitted.string() << "\n";
  return kOk;
}

int cmd_diverge(const std::string& original, const std::vector<std::string>& twins, const std::string& config_path,
                const Common& c, RunManifest& manifest) {
  const fs::path out(c.out);
  const MabcdConfig config = load_config(config_path, Completeness::kPartial);
  const auto g = load_checked(original, c.relabel);
  if (config.layer_count() != g.network.layer_count()) {
    throw ValidationError("config and original network differ in layer count");
  }
  ensure_dir(out);
  manifest.input(original);
  manifest.input(config_path);
  for (const auto& t : twins) manifest.input(t);
  manifest.flag("relabel", c.relabel);

  const NetworkSummary summary = summarize(g.network, c.jobs);
  std::vector<DivergenceReport> reports(twins.size());
  for (std::size_t k = 0; k < twins.size(); ++k) {
    const auto twin = load_checked(twins[k], c.relabel);
    if (twin.network.layer_count() != g.network.layer_count()) {
      throw ValidationError(twins[k] + ": layer count differs from the original");
    }
    reports[k] = full_report(g.network, summary, summarize(twin.network, c.jobs), config);
    print_warnings(reports[k].warnings);
  }

  std::ostringstream csv;
  csv << report_csv_header() << '\n';
  for (std::size_t k = 0; k < twins.size(); ++k) csv << report_csv_row(fs::path(twins[k]).filename().string(), reports[k]) << '\n';
  csv << report_csv_row("mean", mean_report(reports)) << '\n';
  const fs::path table = out / "divergence.csv";
  write_atomic(table, csv.str());
  manifest.output(table);

  nlohmann::ordered_json details = nlohmann::ordered_json::array();
  for (std::size_t k = 0; k < twins.size(); ++k) {
    details.push_back({{"twin", twins[k]}, {"report", nlohmann::ordered_json::parse(report_to_json(reports[k], -1))}});
  }
  write_atomic(out / "divergence.json", details.dump(2) + "\n");
  manifest.output(out / "divergence.json");
  manifest.write(out);
  std::cout << table.string() << "\n";
  return kOk;
}

int cmd_sweep(const std::string& network, const std::vector<std::size_t>& dims, std::size_t eval_twins,
              const FitFlags& flags, const Common& c, RunManifest& manifest) {
  if (dims.empty()) throw UsageError("--dims needs at least one value");
  for (auto d : dims) {
    if (d < 1) throw UsageError("--dims values must be positive");
  }
  FitFlags f = flags;
  f.loss = "r";
  SweepOptions options;
  options.dims = dims;
  options.fit = to_fit_options(f, c);
  options.eval_twins = eval_twins;
  const fs::path out(c.out);
  ensure_dir(out);
  manifest.input(network);
  record_fit_flags(manifest, f, c);
  manifest.flag("dims", dims);
  manifest.flag("eval_twins", eval_twins);

  const auto loaded = load_checked(network, c.relabel);
  const auto extraction = extract(loaded.network, c.seed, c.jobs);
  print_warnings(extraction.warnings);
  write_atomic(out / "extraction.json", extraction_to_json(extraction) + "\n");
  manifest.output(out / "extraction.json");
  const NetworkSummary summary = summary_from_extraction(extraction);

  std::ostringstream table;
  table << sweep_csv_header() << '\n';
  sweep_dimensions(loaded.network, extraction, summary, options, [&](const SweepRow& row) {
    if (row.ok) {
      const fs::path dir = out / ("d" + std::to_string(row.d));
      ensure_dir(dir);
      write_atomic(dir / "fitted.json", config_to_json(row.fit->fitted) + "\n");
      std::ostringstream trace;
      trace << trace_csv_header(row.fit->trace.names) << '\n';
      for (const auto& r : row.fit->trace.records) trace << trace_csv_row(r) << '\n';
      write_atomic(dir / "trace.csv", trace.str());
      manifest.output(dir / "fitted.json");
      manifest.output(dir / "trace.csv");
      std::cerr << "d=" << row.d << ": best loss " << row.fit->trace.best_loss << "\n";
    } else {
      std::cerr << "d=" << row.d << ": failed: " << row.error << "\n";
    }
    table << sweep_csv_row(row) << '\n';
  });
  const fs::path path = out / "sweep.csv";
  write_atomic(path, table.str());
  manifest.output(path);
  manifest.write(out);
  std::cout << path.string() << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multilayer network twinning: extraction, generation, fitting and divergence scoring"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  Common common;

  std::string network;
  auto* extract_cmd = app.add_subcommand("extract", "Estimate a generator configuration from a network");
  extract_cmd->add_option("network", network, "Layered edge-list file")->required();
  extract_cmd->add_flag("--relabel", common.relabel, "Map arbitrary actor tokens to 1..n");
  add_common(extract_cmd, common);

  std::string config_path;
  std::optional<std::uint64_t> generate_seed;
  std::size_t count = 1;
  auto* generate_cmd = app.add_subcommand("generate", "Generate networks from a complete configuration");
  generate_cmd->add_option("config", config_path, "Configuration file")->required();
  generate_cmd->add_option("--count", count, "Number of networks")->capture_default_str()->check(CLI::PositiveNumber);
  generate_cmd->add_option("--seed", generate_seed, "Base random seed (default: the config's seed)");
  add_common(generate_cmd, common, false);

  FitFlags fit_flags;
  auto add_fit = [&](CLI::App* cmd, bool with_loss) {
    cmd->add_option("network", network, "Layered edge-list file")->required();
    cmd->add_option("--vars", fit_flags.vars, "Searched variables: r or r,tau")->capture_default_str();
    if (with_loss) cmd->add_option("--loss", fit_flags.loss, "Loss: r, tau or mean")->capture_default_str();
    cmd->add_option("--budget", fit_flags.budget, "Objective evaluations")->capture_default_str();
    cmd->add_option("--init", fit_flags.init, "Initial design size")->capture_default_str();
    cmd->add_option("--twins", fit_flags.twins, "Twins per evaluation")->capture_default_str();
    cmd->add_flag("--relabel", common.relabel, "Map arbitrary actor tokens to 1..n");
    add_common(cmd, common);
  };
  auto* fit_cmd = app.add_subcommand("fit", "Extract, then fit the free parameters by Bayesian optimisation");
  add_fit(fit_cmd, true);
  fit_cmd->add_option("--d", fit_flags.d, "Reference layer dimension")->capture_default_str();

  std::string original;
  std::vector<std::string> twins;
  auto* diverge_cmd = app.add_subcommand("diverge", "Score twins against an original network");
  diverge_cmd->add_option("original", original, "Original network")->required();
  diverge_cmd->add_option("twins", twins, "Twin networks")->required();
  diverge_cmd->add_option("--config", config_path, "Configuration extracted from the original")->required();
  diverge_cmd->add_flag("--relabel", common.relabel, "Map arbitrary actor tokens to 1..n");
  add_common(diverge_cmd, common, false);

  std::vector<std::size_t> dims{1, 2, 4, 8};
  std::size_t eval_twins = 10;
  auto* sweep_cmd = app.add_subcommand("sweep-d", "Fit r with the D_r loss for several reference dimensions");
  add_fit(sweep_cmd, false);
  sweep_cmd->add_option("--dims", dims, "Dimensions to try")->delimiter(',')->capture_default_str();
  sweep_cmd->add_option("--eval-twins", eval_twins, "Twins scored per dimension")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kValidationError;
  }

  CLI::App* chosen = app.get_subcommands().front();
  RunManifest manifest(chosen->get_name(), argc, argv);
  try {
    if (chosen == extract_cmd) return cmd_extract(network, common, manifest);
    if (chosen == generate_cmd) return cmd_generate(config_path, generate_seed, count, common, manifest);
    if (chosen == fit_cmd) return cmd_fit(network, fit_flags, common, manifest);
    if (chosen == diverge_cmd) return cmd_diverge(original, twins, config_path, common, manifest);
    if (chosen == sweep_cmd) return cmd_sweep(network, dims, eval_twins, fit_flags, common, manifest);
  } catch (const InfeasibleError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInfeasible;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIoError;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n" << chosen->help();
    return kValidationError;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kValidationError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kValidationError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIoError;
  }
  return kIoError;
}
