#include "mltwin/gp.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace mltwin {

namespace {

constexpr double kLogBounds[3][2] = {
    {-4.605170185988091, 4.605170185988091},  // amplitude in [1e-2, 1e2]
    {-4.605170185988091, 2.302585092994046},  // length in [1e-2, 10]
    {-23.025850929940457, 0.0},               // noise in [1e-10, 1]
};

struct Standardised {
  Eigen::VectorXd y;
  double mean = 0.0, scale = 1.0;
};

Standardised standardise(std::span<const double> y) {
  Standardised s;
  const auto n = static_cast<double>(y.size());
  for (double v : y) s.mean += v;
  s.mean /= n;
  double var = 0.0;
  for (double v : y) var += (v - s.mean) * (v - s.mean);
  var /= n;
  s.scale = var > 0.0 ? std::sqrt(var) : 1.0;
  s.y.resize(static_cast<Eigen::Index>(y.size()));
  for (std::size_t k = 0; k < y.size(); ++k) s.y[static_cast<Eigen::Index>(k)] = (y[k] - s.mean) / s.scale;
  return s;
}

}  // namespace

double GaussianProcess::kernel(std::span<const double> a, std::span<const double> b) const {
  double d2 = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) d2 += (a[k] - b[k]) * (a[k] - b[k]);
  return hyper_.amplitude * std::exp(-0.5 * d2 / (hyper_.length * hyper_.length));
}

GaussianProcess GaussianProcess::with_hyper(const std::vector<std::vector<double>>& x, std::span<const double> y,
                                            const GpHyper& hyper) {
  if (x.size() != y.size() || x.empty()) throw std::invalid_argument("GaussianProcess: inputs and outputs disagree");
  GaussianProcess gp;
  gp.x_ = x;
  gp.hyper_ = hyper;
  const Standardised s = standardise(y);
  gp.y_mean_ = s.mean;
  gp.y_scale_ = s.scale;

  const auto n = static_cast<Eigen::Index>(x.size());
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) k(i, j) = k(j, i) = gp.kernel(x[i], x[j]);
  }
  k.diagonal().array() += hyper.noise;

  for (double jitter : {0.0, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6}) {
    Eigen::MatrixXd trial = k;
    trial.diagonal().array() += jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(trial);
    if (llt.info() != Eigen::Success) continue;
    gp.chol_ = llt.matrixL();
    gp.alpha_ = llt.solve(s.y);
    gp.lml_ = -0.5 * s.y.dot(gp.alpha_) - gp.chol_.diagonal().array().log().sum() -
              0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
    return gp;
  }
  throw GpError("covariance matrix is singular even with jitter 1e-6");
}

GaussianProcess GaussianProcess::fit(const std::vector<std::vector<double>>& x, std::span<const double> y) {
  if (x.size() < 2) throw std::invalid_argument("GaussianProcess::fit needs at least two observations");
  auto score = [&](const double* theta) {
    try {
      return with_hyper(x, y, {std::exp(theta[0]), std::exp(theta[1]), std::exp(theta[2])}).lml_;
    } catch (const GpError&) {
      return -std::numeric_limits<double>::infinity();
    }
  };

  const double starts[4][3] = {
      {0.0, std::log(0.1), std::log(1e-2)},
      {0.0, std::log(0.3), std::log(1e-4)},
      {0.0, std::log(1.0), std::log(1e-6)},
      {0.0, std::log(0.05), std::log(1e-1)},
  };
  double best_theta[3] = {0.0, 0.0, 0.0};
  double best_score = -std::numeric_limits<double>::infinity();
  for (const auto& start : starts) {
    double theta[3] = {start[0], start[1], start[2]};
    double current = score(theta);
    double step[3] = {1.0, 1.0, 2.0};
    for (int it = 0; it < 50; ++it) {
      bool moved = false;
      for (int c = 0; c < 3; ++c) {
        for (double sign : {1.0, -1.0}) {
          double trial[3] = {theta[0], theta[1], theta[2]};
          trial[c] = std::clamp(theta[c] + sign * step[c], kLogBounds[c][0], kLogBounds[c][1]);
          if (trial[c] == theta[c]) continue;
          const double s = score(trial);
          if (s > current) {
            current = s;
            theta[c] = trial[c];
            moved = true;
            break;
          }
        }
      }
      if (!moved) {
        for (double& s : step) s *= 0.5;
        if (step[0] < 1e-4) break;
      }
    }
    if (current > best_score) {
      best_score = current;
      std::copy(theta, theta + 3, best_theta);
    }
  }
  if (!std::isfinite(best_score)) throw GpError("no hyperparameters give a positive-definite covariance");
  return with_hyper(x, y, {std::exp(best_theta[0]), std::exp(best_theta[1]), std::exp(best_theta[2])});
}

GaussianProcess::Prediction GaussianProcess::predict(std::span<const double> point) const {
  const auto n = static_cast<Eigen::Index>(x_.size());
  Eigen::VectorXd ks(n);
  for (Eigen::Index i = 0; i < n; ++i) ks[i] = kernel(point, x_[static_cast<std::size_t>(i)]);
  const Eigen::VectorXd v = chol_.triangularView<Eigen::Lower>().solve(ks);
  Prediction p;
  p.mean = y_mean_ + y_scale_ * ks.dot(alpha_);
  p.variance = std::max(0.0, y_scale_ * y_scale_ * (hyper_.amplitude - v.squaredNorm()));
  return p;
}

double expected_improvement(double mean, double variance, double best) {
  const double improvement = best - mean;
  const double sd = std::sqrt(std::max(0.0, variance));
  if (sd < 1e-12) return std::max(0.0, improvement);
  const double z = improvement / sd;
  const double cdf = 0.5 * std::erfc(-z / std::numbers::sqrt2);
  const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
  return improvement * cdf + sd * pdf;
}

}  // namespace mltwin
