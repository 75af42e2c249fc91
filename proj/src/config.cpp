#include "mltwin/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace mltwin {

namespace {

[[noreturn]] void fail(std::size_t layer, const std::string& what) {
  throw ConfigError("layer " + std::to_string(layer + 1) + ": " + what);
}

}  // namespace

void validate(const MabcdConfig& c, Completeness completeness) {
  if (c.n < 1) throw ConfigError("n must be positive");
  const std::size_t l = c.layers.size();
  if (l < 1) throw ConfigError("at least one layer is required");
  if (completeness == Completeness::kComplete) {
    if (!c.d) throw ConfigError("d is unset");
    if (*c.d < 1) throw ConfigError("d must be positive");
  }
  if (c.R.size() != l * l) throw ConfigError("R must have l*l entries");
  for (std::size_t i = 0; i < l; ++i) {
    for (std::size_t j = 0; j < l; ++j) {
      const double v = c.R[i * l + j];
      if (!(v >= 0.0 && v <= 1.0)) throw ConfigError("R entries must lie in [0, 1]");
      if (std::abs(v - c.R[j * l + i]) > 1e-12) throw ConfigError("R must be symmetric");
    }
  }
  for (std::size_t i = 0; i < l; ++i) {
    const LayerParams& p = c.layers[i];
    if (!(p.q > 0.0 && p.q <= 1.0)) fail(i, "q must lie in (0, 1]");
    if (!(p.tau >= -1.0 && p.tau <= 1.0)) fail(i, "tau must lie in [-1, 1]");
    if (p.r) {
      if (!(*p.r >= 0.0 && *p.r <= 1.0)) fail(i, "r must lie in [0, 1]");
    } else if (completeness == Completeness::kComplete) {
      fail(i, "r is unset");
    }
    if (!(p.gamma > 2.0 && p.gamma < 3.0)) fail(i, "gamma must lie in (2, 3)");
    if (p.delta < 1) fail(i, "delta must be at least 1");
    if (p.Delta < p.delta) fail(i, "Delta must be at least delta");
    if (p.Delta >= c.n) fail(i, "Delta must be below n");
    if (!(p.beta > 1.0 && p.beta < 2.0)) fail(i, "beta must lie in (1, 2)");
    if (p.s <= p.delta) fail(i, "s must exceed delta");
    if (p.S < p.s) fail(i, "S must be at least s");
    if (p.S > c.n) fail(i, "S must not exceed n");
    if (!(p.xi > 0.0 && p.xi < 1.0)) fail(i, "xi must lie in (0, 1)");
  }
}

std::vector<double> uniform_correlation(std::size_t layers, double off_diagonal) {
  std::vector<double> r(layers * layers, off_diagonal);
  for (std::size_t i = 0; i < layers; ++i) r[i * layers + i] = 1.0;
  return r;
}

std::size_t active_target(double q, std::size_t n) {
  const double x = q * static_cast<double>(n);
  double rounded = std::nearbyint(x);  // default rounding mode: ties to even
  if (rounded < 1.0) rounded = 1.0;
  return static_cast<std::size_t>(rounded);
}

std::string config_to_json(const MabcdConfig& c, int indent) {
  nlohmann::ordered_json doc;
  doc["n"] = c.n;
  doc["l"] = c.layers.size();
  doc["d"] = c.d ? nlohmann::ordered_json(*c.d) : nlohmann::ordered_json(nullptr);
  doc["seed"] = c.seed;
  doc["R"] = c.R;
  auto& layers = doc["layers"] = nlohmann::ordered_json::array();
  for (const LayerParams& p : c.layers) {
    nlohmann::ordered_json l;
    l["q"] = p.q;
    l["tau"] = p.tau;
    l["r"] = p.r ? nlohmann::ordered_json(*p.r) : nlohmann::ordered_json(nullptr);
    l["gamma"] = p.gamma;
    l["delta"] = p.delta;
    l["Delta"] = p.Delta;
    l["beta"] = p.beta;
    l["s"] = p.s;
    l["S"] = p.S;
    l["xi"] = p.xi;
    layers.push_back(std::move(l));
  }
  return doc.dump(indent);
}

MabcdConfig config_from_json(const std::string& text, Completeness completeness) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  MabcdConfig c;
  try {
    c.n = doc.at("n").get<std::size_t>();
    if (doc.contains("d") && !doc["d"].is_null()) c.d = doc["d"].get<std::size_t>();
    if (doc.contains("seed")) c.seed = doc["seed"].get<std::uint64_t>();
    c.R = doc.at("R").get<std::vector<double>>();
    for (const auto& l : doc.at("layers")) {
      LayerParams p;
      p.q = l.at("q").get<double>();
      p.tau = l.at("tau").get<double>();
      if (l.contains("r") && !l["r"].is_null()) p.r = l["r"].get<double>();
      p.gamma = l.at("gamma").get<double>();
      p.delta = l.at("delta").get<std::uint32_t>();
      p.Delta = l.at("Delta").get<std::uint32_t>();
      p.beta = l.at("beta").get<double>();
      p.s = l.at("s").get<std::uint32_t>();
      p.S = l.at("S").get<std::uint32_t>();
      p.xi = l.at("xi").get<double>();
      c.layers.push_back(p);
    }
    if (doc.contains("l") && doc["l"].get<std::size_t>() != c.layers.size()) {
      throw ConfigError("l does not match the number of layer sections");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  validate(c, completeness);
  return c;
}

MabcdConfig load_config(const std::filesystem::path& path, Completeness completeness) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open config file: " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return config_from_json(buffer.str(), completeness);
}

void save_config(const std::filesystem::path& path, const MabcdConfig& config) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write config file: " + path.string());
  out << config_to_json(config) << '\n';
}

}  // namespace mltwin
