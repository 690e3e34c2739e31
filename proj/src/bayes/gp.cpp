#include "mvmdlstm/bayes/gp.hpp"

#include "mvmdlstm/error.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>

namespace mvmdlstm::bayes {

double matern52(const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::Ref<const Eigen::VectorXd>& b,
                const KernelParams& params) {
  const double r = ((a - b).array() / params.length_scales.array()).matrix().norm();
  const double s = std::sqrt(5.0) * r;
  return params.signal_variance * (1.0 + s + s * s / 3.0) * std::exp(-s);
}

namespace {

Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& points, const KernelParams& params) {
  const Eigen::Index n = points.rows();
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    k(i, i) = params.signal_variance;
    for (Eigen::Index j = 0; j < i; ++j) {
      k(i, j) = k(j, i) = matern52(points.row(i).transpose(), points.row(j).transpose(), params);
    }
  }
  return k;
}

void check_inputs(const Eigen::MatrixXd& points, const Eigen::VectorXd& values, const KernelParams& params) {
  if (points.rows() < 1) throw GpFitError("GP fit needs at least one observation");
  if (points.rows() != values.size()) throw GpFitError("GP fit: points and values disagree in count");
  if (params.length_scales.size() != points.cols()) {
    throw GpFitError("GP fit: need one length scale per input dimension");
  }
  if (!(params.signal_variance > 0.0) || !(params.noise_variance >= 0.0) ||
      !(params.length_scales.array() > 0.0).all()) {
    throw GpFitError("GP fit: kernel hyperparameters must be positive");
  }
  if (!values.allFinite() || !points.allFinite()) throw GpFitError("GP fit: non-finite observation");
}

}  // namespace

GpSurrogate::GpSurrogate(Eigen::MatrixXd points, Eigen::VectorXd values, KernelParams params,
                         double prior_mean)
    : points_(std::move(points)), values_(std::move(values)), params_(std::move(params)),
      prior_mean_(prior_mean) {
  check_inputs(points_, values_, params_);
  const Eigen::Index n = points_.rows();

  if (params_.noise_variance == 0.0) {
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < i; ++j) {
        if (points_.row(i) == points_.row(j) && values_[i] != values_[j]) {
          throw GpFitError("GP fit: kernel matrix indefinite (repeated input with conflicting "
                           "values and zero noise)");
        }
      }
    }
  }

  Eigen::MatrixXd k = kernel_matrix(points_, params_);
  k.diagonal().array() += params_.noise_variance;

  constexpr std::array<double, 5> jitters = {0.0, 1e-12, 1e-10, 1e-8, 1e-6};
  std::optional<Eigen::LLT<Eigen::MatrixXd>> llt;
  for (double j : jitters) {
    Eigen::MatrixXd kj = k;
    kj.diagonal().array() += j * params_.signal_variance;
    Eigen::LLT<Eigen::MatrixXd> attempt(kj);
    if (attempt.info() == Eigen::Success && attempt.matrixL().toDenseMatrix().diagonal().minCoeff() > 0.0) {
      llt = std::move(attempt);
      jitter_ = j * params_.signal_variance;
      break;
    }
  }
  if (!llt) throw GpFitError("GP fit: kernel matrix not positive definite after jitter 1e-6");

  lower_ = llt->matrixL();
  const Eigen::VectorXd centered = values_.array() - prior_mean_;
  weights_ = llt->solve(centered);
  log_marginal_likelihood_ = -0.5 * centered.dot(weights_) - lower_.diagonal().array().log().sum() -
                             0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
}

GpPrediction GpSurrogate::predict(const Eigen::Ref<const Eigen::VectorXd>& query) const {
  const Eigen::Index n = points_.rows();
  Eigen::VectorXd k_star(n);
  for (Eigen::Index i = 0; i < n; ++i) k_star[i] = matern52(points_.row(i).transpose(), query, params_);
  const Eigen::VectorXd v = lower_.triangularView<Eigen::Lower>().solve(k_star);
  GpPrediction out;
  out.mean = prior_mean_ + k_star.dot(weights_);
  out.variance = std::max(0.0, params_.signal_variance - v.squaredNorm());
  return out;
}

GpSurrogate gp_fit(const Eigen::MatrixXd& points, const Eigen::VectorXd& values,
                   const KernelParams& params, double prior_mean) {
  return GpSurrogate(points, values, params, prior_mean);
}

GpSurrogate gp_fit_auto(const Eigen::MatrixXd& points, const Eigen::VectorXd& values) {
  if (values.size() < 1) throw GpFitError("GP fit needs at least one observation");
  const double mean = values.mean();
  double var = values.size() > 1 ? (values.array() - mean).square().sum() / static_cast<double>(values.size() - 1)
                                 : 0.0;
  if (!(var > 1e-12)) var = 1.0;

  constexpr std::array<double, 5> signal_grid = {0.1, 0.3, 1.0, 3.0, 10.0};
  constexpr std::array<double, 5> length_grid = {0.05, 0.1, 0.2, 0.4, 0.8};
  constexpr std::array<double, 5> noise_grid = {1e-6, 1e-4, 1e-3, 1e-2, 1e-1};

  std::optional<GpSurrogate> best;
  for (double s : signal_grid) {
    for (double l : length_grid) {
      for (double nz : noise_grid) {
        KernelParams p;
        p.signal_variance = s * var;
        p.length_scales = Eigen::VectorXd::Constant(points.cols(), l);
        p.noise_variance = nz * var;
        try {
          GpSurrogate candidate(points, values, p, mean);
          if (!best || candidate.log_marginal_likelihood() > best->log_marginal_likelihood()) {
            best = std::move(candidate);
          }
        } catch (const GpFitError&) {
          // try the next grid point
        }
      }
    }
  }
  if (!best) throw GpFitError("GP fit: no grid hyperparameters gave a positive definite kernel");
  return std::move(*best);
}

GpPrediction gp_predict(const GpSurrogate& surrogate, const Eigen::Ref<const Eigen::VectorXd>& query) {
  return surrogate.predict(query);
}

double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double expected_improvement(double mean, double variance, double best) {
  const double gap = best - mean;
  if (!(variance > 0.0)) return std::max(gap, 0.0);
  const double sigma = std::sqrt(variance);
  const double z = gap / sigma;
  // erfc keeps full relative accuracy in the lower tail, so the cancellation
  // below costs at most log10(z^2) digits before phi underflows.
  const double tail = z * normal_cdf(z) + normal_pdf(z);
  return std::max(sigma * tail, 0.0);
}

double expected_improvement(const GpSurrogate& surrogate, const Eigen::Ref<const Eigen::VectorXd>& query,
                            double best) {
  const auto p = surrogate.predict(query);
  return expected_improvement(p.mean, p.variance, best);
}

}  // namespace mvmdlstm::bayes
