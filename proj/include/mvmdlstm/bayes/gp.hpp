#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>

namespace mvmdlstm::bayes {

/// Matern-5/2 hyperparameters. One length scale per input dimension.
struct KernelParams {
  double signal_variance = 1.0;
  Eigen::VectorXd length_scales;
  double noise_variance = 0.0;
};

double matern52(const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::Ref<const Eigen::VectorXd>& b,
                const KernelParams& params);

struct GpPrediction {
  double mean = 0.0;
  double variance = 0.0;
};

/// Gaussian-process posterior over the unit cube with a constant prior mean.
///
/// The kernel matrix K + noise I is factored once. If the plain factorization
/// fails, jitter of 1e-12 .. 1e-6 (times the signal variance) is added before
/// giving up with GpFitError. With zero noise, two observations at the same
/// input with different values are rejected outright: no jitter makes that
/// data consistent with an interpolating model.
class GpSurrogate {
 public:
  GpSurrogate(Eigen::MatrixXd points, Eigen::VectorXd values, KernelParams params,
              double prior_mean = 0.0);

  GpPrediction predict(const Eigen::Ref<const Eigen::VectorXd>& query) const;

  const Eigen::MatrixXd& points() const noexcept { return points_; }
  const Eigen::VectorXd& values() const noexcept { return values_; }
  const KernelParams& params() const noexcept { return params_; }
  double prior_mean() const noexcept { return prior_mean_; }
  double jitter() const noexcept { return jitter_; }
  double log_marginal_likelihood() const noexcept { return log_marginal_likelihood_; }
  const Eigen::MatrixXd& cholesky_factor() const noexcept { return lower_; }

 private:
  Eigen::MatrixXd points_;  // n x d, rows are observations
  Eigen::VectorXd values_;
  KernelParams params_;
  double prior_mean_;
  double jitter_ = 0.0;
  Eigen::MatrixXd lower_;
  Eigen::VectorXd weights_;  // (K + noise I)^-1 (y - m)
  double log_marginal_likelihood_ = 0.0;
};

GpSurrogate gp_fit(const Eigen::MatrixXd& points, const Eigen::VectorXd& values,
                   const KernelParams& params, double prior_mean = 0.0);

/// Prior mean = sample mean; (signal variance, length scale, noise) picked
/// from a fixed 5 x 5 x 5 grid by log marginal likelihood. Variances on the
/// grid scale with the sample variance of `values`.
GpSurrogate gp_fit_auto(const Eigen::MatrixXd& points, const Eigen::VectorXd& values);

GpPrediction gp_predict(const GpSurrogate& surrogate, const Eigen::Ref<const Eigen::VectorXd>& query);

/// Expected improvement below `best` (minimization).
double expected_improvement(double mean, double variance, double best);
double expected_improvement(const GpSurrogate& surrogate, const Eigen::Ref<const Eigen::VectorXd>& query,
                            double best);

double normal_pdf(double z);
double normal_cdf(double z);

}  // namespace mvmdlstm::bayes
