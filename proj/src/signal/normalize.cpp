#include "mvmdlstm/signal/normalize.hpp"

#include "mvmdlstm/error.hpp"

namespace mvmdlstm::signal {
namespace {

void check_scale_count(const MultichannelSeries& series, const std::vector<ChannelScale>& scales) {
  if (static_cast<Eigen::Index>(scales.size()) != series.n_channels()) {
    throw DataError("have " + std::to_string(scales.size()) + " channel scales for " +
                    std::to_string(series.n_channels()) + " channels");
  }
}

}  // namespace

std::pair<MultichannelSeries, std::vector<ChannelScale>> min_max_normalize(
    const MultichannelSeries& series) {
  std::vector<ChannelScale> scales;
  for (Eigen::Index j = 0; j < series.n_channels(); ++j) {
    const auto col = series.values().col(j);
    ChannelScale s{col.minCoeff(), col.maxCoeff()};
    if (!(s.max > s.min)) {
      throw DegenerateScaleError("channel '" + series.channel_names()[static_cast<std::size_t>(j)] +
                                 "' is constant; cannot min-max normalize");
    }
    scales.push_back(s);
  }
  return {apply_scales(series, scales), scales};
}

MultichannelSeries apply_scales(const MultichannelSeries& series,
                                const std::vector<ChannelScale>& scales) {
  check_scale_count(series, scales);
  Eigen::MatrixXd out = series.values();
  for (Eigen::Index j = 0; j < out.cols(); ++j) {
    const auto& s = scales[static_cast<std::size_t>(j)];
    out.col(j) = ((out.col(j).array() - s.min) / (s.max - s.min)).matrix();
  }
  return MultichannelSeries(std::move(out), series.dt(), series.channel_names());
}

MultichannelSeries denormalize(const MultichannelSeries& series,
                               const std::vector<ChannelScale>& scales) {
  check_scale_count(series, scales);
  Eigen::MatrixXd out = series.values();
  for (Eigen::Index j = 0; j < out.cols(); ++j) {
    const auto& s = scales[static_cast<std::size_t>(j)];
    out.col(j) = (s.min + out.col(j).array() * (s.max - s.min)).matrix();
  }
  return MultichannelSeries(std::move(out), series.dt(), series.channel_names());
}

}  // namespace mvmdlstm::signal
