#include "mvmdlstm/pipeline/windows.hpp"

#include "mvmdlstm/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mvmdlstm::pipeline {

void SplitSpec::validate() const {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw ConfigError("split: train fraction must lie in (0, 1)");
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) {
    throw ConfigError("split: validation fraction must lie in (0, 1)");
  }
}

SplitIndices split_indices(std::size_t n, const SplitSpec& spec, std::size_t lags) {
  spec.validate();
  SplitIndices idx;
  idx.n = n;
  idx.train_end = static_cast<std::size_t>(std::floor(spec.train_fraction * static_cast<double>(n) + 1e-9));
  const auto val = static_cast<std::size_t>(std::floor(spec.validation_fraction * static_cast<double>(idx.train_end) + 1e-9));
  idx.validation_begin = idx.train_end - val;
  const std::size_t need = lags + 1;
  if (idx.validation_begin < need) {
    throw SplitError("split: fit part has " + std::to_string(idx.validation_begin) + " samples, need " +
                     std::to_string(need));
  }
  if (val < need) {
    throw SplitError("split: validation part has " + std::to_string(val) + " samples, need " + std::to_string(need));
  }
  if (n - idx.train_end < need) {
    throw SplitError("split: test part has " + std::to_string(n - idx.train_end) + " samples, need " +
                     std::to_string(need));
  }
  return idx;
}

Split chronological_split(const signal::MultichannelSeries& series, const SplitSpec& spec, std::size_t lags) {
  const SplitIndices idx = split_indices(series.n_samples(), spec, lags);
  return {series.slice(0, idx.train_end), series.slice(idx.validation_begin, idx.train_end - idx.validation_begin),
          series.slice(idx.train_end, idx.n - idx.train_end), idx};
}

WindowedDataset make_windows(const Eigen::Ref<const Eigen::VectorXd>& series, std::size_t lags, std::size_t horizon) {
  const auto n = static_cast<std::size_t>(series.size());
  return make_windows(series, series, lags, horizon, 0, n);
}

WindowedDataset make_windows(const Eigen::Ref<const Eigen::MatrixXd>& features,
                             const Eigen::Ref<const Eigen::VectorXd>& target, std::size_t lags,
                             std::size_t horizon, std::size_t target_begin, std::size_t target_end) {
  if (lags < 1 || horizon < 1) throw ConfigError("windows: lags and horizon must be >= 1");
  const auto n = static_cast<std::size_t>(features.rows());
  if (static_cast<std::size_t>(target.size()) != n) throw ConfigError("windows: features and target differ in length");
  const std::size_t first = std::max(target_begin, lags + horizon - 1);
  const std::size_t last = std::min(target_end, n);
  if (last <= first) {
    throw SplitError("windows: series of length " + std::to_string(n) + " is too short for " +
                     std::to_string(lags) + " lags over the requested targets");
  }
  const std::size_t m = last - first;
  const auto d = features.cols();
  const auto lag_i = static_cast<Eigen::Index>(lags);

  WindowedDataset out;
  out.target_index.resize(m);
  Eigen::MatrixXd flat(static_cast<Eigen::Index>(m), lag_i * d);
  Eigen::VectorXd y(static_cast<Eigen::Index>(m));
  for (std::size_t r = 0; r < m; ++r) {
    const std::size_t t = first + r;
    const std::size_t start = t + 1 - horizon - lags;
    const auto ri = static_cast<Eigen::Index>(r);
    for (Eigen::Index s = 0; s < lag_i; ++s) {
      flat.row(ri).segment(s * d, d) = features.row(static_cast<Eigen::Index>(start) + s);
    }
    y[ri] = target[static_cast<Eigen::Index>(t)];
    out.target_index[r] = t;
  }
  out.data = {lstm::WindowBatch(std::move(flat), lag_i, d), std::move(y)};
  return out;
}

}  // namespace mvmdlstm::pipeline
