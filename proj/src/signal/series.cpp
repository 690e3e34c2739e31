#include "mvmdlstm/signal/series.hpp"

#include "mvmdlstm/error.hpp"

#include <cmath>

namespace mvmdlstm::signal {

MultichannelSeries::MultichannelSeries(Eigen::MatrixXd values, double dt,
                                       std::vector<std::string> channel_names)
    : values_(std::move(values)), dt_(dt), names_(std::move(channel_names)) {
  if (values_.rows() < 2) {
    throw DataError("series needs at least 2 samples, got " + std::to_string(values_.rows()));
  }
  if (values_.cols() < 1) {
    throw DataError("series needs at least one channel");
  }
  if (!(dt_ > 0.0) || !std::isfinite(dt_)) {
    throw DataError("sampling interval must be positive and finite");
  }
  if (static_cast<Eigen::Index>(names_.size()) != values_.cols()) {
    throw DataError("expected " + std::to_string(values_.cols()) + " channel names, got " +
                    std::to_string(names_.size()));
  }
  if (!values_.allFinite()) {
    for (Eigen::Index t = 0; t < values_.rows(); ++t) {
      for (Eigen::Index j = 0; j < values_.cols(); ++j) {
        if (!std::isfinite(values_(t, j))) {
          throw DataError("non-finite sample at t=" + std::to_string(t) + ", channel " +
                          names_[static_cast<std::size_t>(j)]);
        }
      }
    }
  }
}

MultichannelSeries::MultichannelSeries(Eigen::MatrixXd values, double dt)
    : MultichannelSeries(values, dt, default_channel_names(values.cols())) {}

MultichannelSeries MultichannelSeries::slice(Eigen::Index begin, Eigen::Index count) const {
  if (begin < 0 || count < 0 || begin + count > n_samples()) {
    throw DataError("slice [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
                    ") out of range for " + std::to_string(n_samples()) + " samples");
  }
  return MultichannelSeries(values_.middleRows(begin, count), dt_, names_);
}

std::vector<std::string> default_channel_names(Eigen::Index n_channels) {
  std::vector<std::string> names;
  names.reserve(static_cast<std::size_t>(std::max<Eigen::Index>(n_channels, 0)));
  for (Eigen::Index j = 0; j < n_channels; ++j) {
    names.push_back("ch" + std::to_string(j + 1));
  }
  return names;
}

MultichannelSeries mirror_extend(const MultichannelSeries& series) {
  const Eigen::Index n = series.n_samples();
  const Eigen::Index left = n / 2;
  const Eigen::Index right = n - left;
  const auto& x = series.values();

  Eigen::MatrixXd out(2 * n, series.n_channels());
  out.topRows(left) = x.topRows(left).colwise().reverse();
  out.middleRows(left, n) = x;
  out.bottomRows(right) = x.bottomRows(right).colwise().reverse();
  return MultichannelSeries(std::move(out), series.dt(), series.channel_names());
}

}  // namespace mvmdlstm::signal
