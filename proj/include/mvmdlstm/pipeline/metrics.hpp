#pragma once

#include <Eigen/Core>

#include <span>

namespace mvmdlstm::pipeline {

using ConstVec = Eigen::Ref<const Eigen::VectorXd>;

/// Mean absolute error as a percentage of `y_max` (not of each actual value).
double mape(const ConstVec& actual, const ConstVec& predicted, double y_max);
double rmse(const ConstVec& actual, const ConstVec& predicted);
double mae(const ConstVec& actual, const ConstVec& predicted);

/// (baseline - proposed) / baseline, as a fraction.
double improvement(double baseline, double proposed);

double monthly_average(std::span<const double> values);

/// Half away from zero. Values within 1e-9 (relative) of a decimal midpoint
/// count as the midpoint, so 0.655 rounds to 0.66 despite its binary form.
double round_half_away(double value, int decimals = 2);

struct MetricSet {
  double mape = 0.0;
  double rmse = 0.0;
  double mae = 0.0;
};

MetricSet evaluate_metrics(const ConstVec& actual, const ConstVec& predicted, double y_max);
MetricSet improvement(const MetricSet& baseline, const MetricSet& proposed);

}  // namespace mvmdlstm::pipeline
