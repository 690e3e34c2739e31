#include "mvmdlstm/pipeline/metrics.hpp"

#include "mvmdlstm/error.hpp"

#include <cmath>
#include <numeric>

namespace mvmdlstm::pipeline {

namespace {

void check_pair(const ConstVec& actual, const ConstVec& predicted) {
  if (actual.size() == 0) throw MetricError("metric: empty input");
  if (actual.size() != predicted.size()) throw MetricError("metric: actual and predicted differ in length");
}

}  // namespace

double mape(const ConstVec& actual, const ConstVec& predicted, double y_max) {
  check_pair(actual, predicted);
  if (!(y_max > 0.0)) throw MetricError("MAPE: y_max must be positive");
  return 100.0 * (predicted - actual).cwiseAbs().mean() / y_max;
}

double rmse(const ConstVec& actual, const ConstVec& predicted) {
  check_pair(actual, predicted);
  return std::sqrt((predicted - actual).squaredNorm() / static_cast<double>(actual.size()));
}

double mae(const ConstVec& actual, const ConstVec& predicted) {
  check_pair(actual, predicted);
  return (predicted - actual).cwiseAbs().mean();
}

double improvement(double baseline, double proposed) {
  if (!(baseline > 0.0)) throw MetricError("improvement: baseline must be positive");
  return (baseline - proposed) / baseline;
}

double monthly_average(std::span<const double> values) {
  if (values.empty()) throw MetricError("average of zero values");
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

double round_half_away(double value, int decimals) {
  const double scale = std::pow(10.0, decimals);
  const double scaled = value * scale;
  return std::round(scaled + std::copysign(1e-9 * std::max(1.0, std::abs(scaled)), scaled)) / scale;
}

MetricSet evaluate_metrics(const ConstVec& actual, const ConstVec& predicted, double y_max) {
  return {mape(actual, predicted, y_max), rmse(actual, predicted), mae(actual, predicted)};
}

MetricSet improvement(const MetricSet& baseline, const MetricSet& proposed) {
  return {improvement(baseline.mape, proposed.mape), improvement(baseline.rmse, proposed.rmse),
          improvement(baseline.mae, proposed.mae)};
}

}  // namespace mvmdlstm::pipeline
