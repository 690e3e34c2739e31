#pragma once

#include "mvmdlstm/signal/series.hpp"

#include <utility>
#include <vector>

namespace mvmdlstm::signal {

struct ChannelScale {
  double min = 0.0;
  double max = 1.0;

  double normalize(double v) const noexcept { return (v - min) / (max - min); }
  double denormalize(double v) const noexcept { return min + v * (max - min); }
  double span() const noexcept { return max - min; }
};

/// Per-channel affine map onto [0, 1]. Throws DegenerateScaleError for a
/// constant channel.
std::pair<MultichannelSeries, std::vector<ChannelScale>> min_max_normalize(
    const MultichannelSeries& series);

/// Applies previously fitted scales (values outside the fitted range map
/// outside [0, 1]).
MultichannelSeries apply_scales(const MultichannelSeries& series,
                                const std::vector<ChannelScale>& scales);

MultichannelSeries denormalize(const MultichannelSeries& series,
                               const std::vector<ChannelScale>& scales);

}  // namespace mvmdlstm::signal
