#pragma once

// Loss over candidate values of the free generator parameters: mean divergence
// of m twins against the target network's observed matrices.

#include <cstdint>
#include <optional>
#include <span>
#include <string>

#include "mltwin/bayesopt.hpp"
#include "mltwin/config.hpp"
#include "mltwin/estimators.hpp"

namespace mltwin {

enum class Loss { kR, kTau, kMean };
enum class Variables { kR, kRTau };

/// "r", "tau", "mean"
std::optional<Loss> parse_loss(const std::string& text);
std::string loss_name(Loss loss);
/// "r", "r,tau"
std::optional<Variables> parse_variables(const std::string& text);
std::string variables_name(Variables vars);

/// r_1..r_l in [0, 1], followed by tau_1..tau_l in [-1, 1] for kRTau.
SearchSpace make_search_space(Variables vars, std::size_t layers);
/// `base` with the point's values written into the layers.
MabcdConfig apply_point(const MabcdConfig& base, Variables vars, std::span<const double> point);

struct Objective {
  Loss loss = Loss::kR;
  Variables vars = Variables::kR;
  std::size_t twins = 3;
  /// Complete apart from the searched variables (d must be set).
  MabcdConfig base;
  ObservedMatrices target;
  /// Twin k uses seed base_seed + k, k = 1..twins, at every point.
  std::uint64_t base_seed = 0;
  unsigned jobs = 1;
};

struct Evaluation {
  double loss = 1.0;
  bool infeasible = false;
  std::optional<double> D_r, D_tau;  // means over twins, when computed
};

/// Infeasible points, and twins whose selected score is undefined, score 1.0.
Evaluation evaluate_objective(std::span<const double> point, const Objective& objective);

}  // namespace mltwin
