#include "mltwin/objective.hpp"

#include <vector>

#include "mltwin/divergence.hpp"
#include "mltwin/generator.hpp"
#include "mltwin/parallel.hpp"

namespace mltwin {

std::optional<Loss> parse_loss(const std::string& text) {
  if (text == "r") return Loss::kR;
  if (text == "tau") return Loss::kTau;
  if (text == "mean") return Loss::kMean;
  return std::nullopt;
}

std::string loss_name(Loss loss) {
  switch (loss) {
    case Loss::kR: return "r";
    case Loss::kTau: return "tau";
    case Loss::kMean: return "mean";
  }
  return "?";
}

std::optional<Variables> parse_variables(const std::string& text) {
  if (text == "r") return Variables::kR;
  if (text == "r,tau" || text == "tau,r") return Variables::kRTau;
  return std::nullopt;
}

std::string variables_name(Variables vars) { return vars == Variables::kR ? "r" : "r,tau"; }

SearchSpace make_search_space(Variables vars, std::size_t layers) {
  SearchSpace space;
  for (std::size_t i = 0; i < layers; ++i) space.dims.push_back({"r" + std::to_string(i + 1), 0.0, 1.0});
  if (vars == Variables::kRTau) {
    for (std::size_t i = 0; i < layers; ++i) space.dims.push_back({"tau" + std::to_string(i + 1), -1.0, 1.0});
  }
  return space;
}

MabcdConfig apply_point(const MabcdConfig& base, Variables vars, std::span<const double> point) {
  const std::size_t l = base.layer_count();
  const std::size_t expected = vars == Variables::kR ? l : 2 * l;
  if (point.size() != expected) throw std::invalid_argument("apply_point: point has the wrong dimension");
  MabcdConfig c = base;
  for (std::size_t i = 0; i < l; ++i) {
    c.layers[i].r = point[i];
    if (vars == Variables::kRTau) c.layers[i].tau = point[l + i];
  }
  return c;
}

Evaluation evaluate_objective(std::span<const double> point, const Objective& obj) {
  if (obj.twins < 1) throw std::invalid_argument("objective needs at least one twin");
  const MabcdConfig config = apply_point(obj.base, obj.vars, point);
  const bool need_r = obj.loss != Loss::kTau;
  const bool need_tau = obj.loss != Loss::kR;

  struct TwinScore {
    bool infeasible = false;
    std::optional<double> r, tau;
  };
  std::vector<TwinScore> scores(obj.twins);
  parallel_for(obj.twins, obj.jobs, [&](std::size_t k) {
    try {
      const auto twin = generate(config, obj.base_seed + k + 1);
      const MultilayerNetwork& net = twin.network;
      const std::size_t l = net.layer_count();
      if (need_tau) {
        CorrelationMatrix tau(l);
        for (std::size_t i = 0; i < l; ++i) {
          for (std::size_t j = i + 1; j < l; ++j) tau.set(i, j, layer_degree_tau(net, i, j));
        }
        scores[k].tau = d_tau(obj.target.tau, tau);
      }
      if (need_r) {
        std::vector<LayerPartition> partitions(l);
        for (std::size_t i = 0; i < l; ++i) partitions[i] = greedy_modularity(net.layer(i)).partition;
        CorrelationMatrix r(l);
        for (std::size_t i = 0; i < l; ++i) {
          for (std::size_t j = i + 1; j < l; ++j) r.set(i, j, induced_ami(partitions[i], partitions[j]));
        }
        scores[k].r = d_r(obj.target.r, r);
      }
    } catch (const InfeasibleError&) {
      scores[k].infeasible = true;
    }
  });

  Evaluation out;
  double sum_r = 0.0, sum_tau = 0.0, sum_loss = 0.0;
  for (const auto& s : scores) {
    if (s.infeasible) {
      out.infeasible = true;
      break;
    }
    const double r = s.r.value_or(1.0);
    const double tau = s.tau.value_or(1.0);
    sum_r += r;
    sum_tau += tau;
    sum_loss += obj.loss == Loss::kR ? r : obj.loss == Loss::kTau ? tau : 0.5 * (r + tau);
  }
  if (out.infeasible) {
    out.loss = 1.0;
    return out;
  }
  const auto m = static_cast<double>(obj.twins);
  out.loss = sum_loss / m;
  if (need_r) out.D_r = sum_r / m;
  if (need_tau) out.D_tau = sum_tau / m;
  return out;
}

}  // namespace mltwin
