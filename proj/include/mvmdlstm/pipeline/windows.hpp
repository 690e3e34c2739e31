#pragma once

#include "mvmdlstm/lstm/lstm.hpp"
#include "mvmdlstm/signal/series.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <vector>

namespace mvmdlstm::pipeline {

struct SplitSpec {
  double train_fraction = 0.8;
  double validation_fraction = 0.125;  // of the training part, taken from its tail

  void validate() const;
};

/// Sample index boundaries: fit = [0, validation_begin), validation =
/// [validation_begin, train_end), test = [train_end, n).
struct SplitIndices {
  std::size_t n = 0;
  std::size_t validation_begin = 0;
  std::size_t train_end = 0;
};

/// Throws SplitError if the validation or test part holds fewer than lags + 1
/// samples.
SplitIndices split_indices(std::size_t n, const SplitSpec& spec, std::size_t lags);

struct Split {
  signal::MultichannelSeries train;  // includes validation
  signal::MultichannelSeries validation;
  signal::MultichannelSeries test;
  SplitIndices indices;
};

Split chronological_split(const signal::MultichannelSeries& series, const SplitSpec& spec, std::size_t lags);

/// Supervised windows plus the source index of each target.
struct WindowedDataset {
  lstm::Dataset data;
  std::vector<std::size_t> target_index;

  std::size_t size() const noexcept { return target_index.size(); }
};

/// Window m covers samples [m, m + lags); its target is sample
/// m + lags + horizon - 1. Throws SplitError when the series is too short.
WindowedDataset make_windows(const Eigen::Ref<const Eigen::VectorXd>& series, std::size_t lags,
                             std::size_t horizon = 1);

/// Windows over several feature columns (N x d) predicting `target`, keeping
/// only targets with index in [target_begin, target_end).
WindowedDataset make_windows(const Eigen::Ref<const Eigen::MatrixXd>& features,
                             const Eigen::Ref<const Eigen::VectorXd>& target, std::size_t lags,
                             std::size_t horizon, std::size_t target_begin, std::size_t target_end);

}  // namespace mvmdlstm::pipeline
