#pragma once

#include "mvmdlstm/signal/series.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace mvmdlstm::signal {

/// Seconds since the Unix epoch for an ISO-8601 timestamp
/// (YYYY-MM-DD[T ]HH:MM[:SS[.fff]][Z|+HH:MM|-HH:MM]).
double parse_iso8601(std::string_view text);

/// UTC, second resolution: 2021-05-01T00:05:00Z.
std::string format_iso8601(std::int64_t epoch_seconds);

/// Reads `timestamp,<ch1>,...` keeping the first `expected_channels` value
/// columns. dt comes from the first two timestamps; every later step must stay
/// within 1% of it. Missing cells (empty, NaN, NA, null) are rejected, never
/// imputed. Row numbers in errors are 1-based data rows.
MultichannelSeries load_csv(const std::filesystem::path& path, std::size_t expected_channels);

/// Writes with round-trip precision; timestamps start at `start_epoch`.
void write_csv(const MultichannelSeries& series, const std::filesystem::path& path,
               std::int64_t start_epoch = 1619827200 /* 2021-05-01T00:00:00Z */);

}  // namespace mvmdlstm::signal
