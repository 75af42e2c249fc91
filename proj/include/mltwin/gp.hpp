#pragma once

// Gaussian-process regression with an isotropic squared-exponential kernel and
// a white-noise term. Inputs are expected in [0, 1]^D; outputs are
// standardised internally.

#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace mltwin {

struct GpHyper {
  double amplitude = 1.0;  // signal variance, standardised units
  double length = 0.3;
  double noise = 1e-4;     // noise variance, standardised units
};

class GpError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Hyperparameter bounds (log space is searched between them).
inline constexpr double kGpNoiseFloor = 1e-10;

class GaussianProcess {
 public:
  /// Fits hyperparameters by maximising the log marginal likelihood
  /// (4-start coordinate descent in log space). Needs >= 2 observations.
  static GaussianProcess fit(const std::vector<std::vector<double>>& x, std::span<const double> y);
  /// Posterior for fixed hyperparameters. Throws GpError when the covariance
  /// stays singular after jitter escalation.
  static GaussianProcess with_hyper(const std::vector<std::vector<double>>& x, std::span<const double> y,
                                    const GpHyper& hyper);

  struct Prediction {
    double mean = 0.0;
    double variance = 0.0;  // latent function, excluding noise
  };
  Prediction predict(std::span<const double> point) const;

  const GpHyper& hyper() const { return hyper_; }
  double log_marginal_likelihood() const { return lml_; }
  std::size_t size() const { return x_.size(); }
  const std::vector<std::vector<double>>& inputs() const { return x_; }

 private:
  GaussianProcess() = default;
  double kernel(std::span<const double> a, std::span<const double> b) const;

  std::vector<std::vector<double>> x_;
  double y_mean_ = 0.0, y_scale_ = 1.0;
  GpHyper hyper_;
  Eigen::MatrixXd chol_;   // lower Cholesky factor of K + noise I
  Eigen::VectorXd alpha_;  // (K + noise I)^-1 y_standardised
  double lml_ = 0.0;
};

/// Expected improvement below `best` for a minimisation problem.
double expected_improvement(double mean, double variance, double best);

}  // namespace mltwin
