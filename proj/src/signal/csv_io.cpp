#include "mvmdlstm/signal/csv_io.hpp"

#include "mvmdlstm/error.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

namespace mvmdlstm::signal {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      cells.push_back(trim(line.substr(start)));
      break;
    }
    cells.push_back(trim(line.substr(start, pos - start)));
    start = pos + 1;
  }
  return cells;
}

bool is_missing(std::string_view cell) {
  if (cell.empty()) return true;
  std::string lower(cell);
  for (auto& ch : lower) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return lower == "nan" || lower == "na" || lower == "null" || lower == "n/a";
}

int parse_int(std::string_view s, std::string_view whole) {
  int v = 0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw DataError("malformed timestamp '" + std::string(whole) + "'");
  }
  return v;
}

}  // namespace

double parse_iso8601(std::string_view text) {
  const std::string_view s = trim(text);
  auto bad = [&] { return DataError("malformed timestamp '" + std::string(s) + "'"); };
  if (s.size() < 16 || s[4] != '-' || s[7] != '-' || (s[10] != 'T' && s[10] != ' ') ||
      s[13] != ':') {
    throw bad();
  }
  const int year = parse_int(s.substr(0, 4), s);
  const int month = parse_int(s.substr(5, 2), s);
  const int day = parse_int(s.substr(8, 2), s);
  const int hour = parse_int(s.substr(11, 2), s);
  const int minute = parse_int(s.substr(14, 2), s);
  double second = 0.0;
  std::size_t pos = 16;
  if (pos < s.size() && s[pos] == ':') {
    std::size_t end = pos + 1;
    while (end < s.size() && (std::isdigit(static_cast<unsigned char>(s[end])) || s[end] == '.')) ++end;
    const auto sec_text = s.substr(pos + 1, end - pos - 1);
    auto [ptr, ec] = std::from_chars(sec_text.data(), sec_text.data() + sec_text.size(), second);
    if (ec != std::errc() || ptr != sec_text.data() + sec_text.size()) throw bad();
    pos = end;
  }
  double offset = 0.0;
  if (pos < s.size()) {
    const auto zone = s.substr(pos);
    if (zone == "Z") {
      offset = 0.0;
    } else if ((zone[0] == '+' || zone[0] == '-') && zone.size() == 6 && zone[3] == ':') {
      const int oh = parse_int(zone.substr(1, 2), s);
      const int om = parse_int(zone.substr(4, 2), s);
      offset = (zone[0] == '+' ? 1.0 : -1.0) * (oh * 3600.0 + om * 60.0);
    } else {
      throw bad();
    }
  }

  using namespace std::chrono;
  const year_month_day ymd{std::chrono::year{year}, std::chrono::month{static_cast<unsigned>(month)},
                           std::chrono::day{static_cast<unsigned>(day)}};
  if (!ymd.ok() || hour > 23 || minute > 59 || second >= 61.0) throw bad();
  const auto days_since_epoch = sys_days{ymd}.time_since_epoch().count();
  return static_cast<double>(days_since_epoch) * 86400.0 + hour * 3600.0 + minute * 60.0 + second -
         offset;
}

std::string format_iso8601(std::int64_t epoch_seconds) {
  using namespace std::chrono;
  const auto tp = sys_seconds{seconds{epoch_seconds}};
  const auto dp = floor<days>(tp);
  const year_month_day ymd{dp};
  const hh_mm_ss hms{tp - dp};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(hms.hours().count()), static_cast<int>(hms.minutes().count()),
                static_cast<int>(hms.seconds().count()));
  return buf;
}

MultichannelSeries load_csv(const std::filesystem::path& path, std::size_t expected_channels) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open CSV file " + path.string());
  if (expected_channels == 0) throw ConfigError("load_csv: expected_channels must be >= 1");

  std::string line;
  if (!std::getline(in, line)) throw DataError(path.string() + ": empty file");
  const auto header = split_commas(line);
  if (header.size() < expected_channels + 1) {
    throw DataError(path.string() + ": header has " + std::to_string(header.size() - 1) +
                    " value columns, expected at least " + std::to_string(expected_channels));
  }
  std::vector<std::string> names;
  for (std::size_t j = 0; j < expected_channels; ++j) names.emplace_back(header[j + 1]);

  std::vector<double> stamps;
  std::vector<double> flat;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++row;
    const auto cells = split_commas(line);
    if (cells.size() < expected_channels + 1) {
      throw ParseError(row, "expected " + std::to_string(expected_channels + 1) + " cells, got " +
                                std::to_string(cells.size()));
    }
    try {
      stamps.push_back(parse_iso8601(cells[0]));
    } catch (const DataError& e) {
      throw ParseError(row, e.what());
    }
    for (std::size_t j = 0; j < expected_channels; ++j) {
      const auto cell = cells[j + 1];
      if (is_missing(cell)) throw GapError(row, "column '" + names[j] + "'");
      double v = 0.0;
      const auto* end = cell.data() + cell.size();
      auto [ptr, ec] = std::from_chars(cell.data(), end, v);
      if (ec != std::errc() || ptr != end || !std::isfinite(v)) {
        throw ParseError(row, "malformed number '" + std::string(cell) + "' in column '" +
                                  names[j] + "'");
      }
      flat.push_back(v);
    }
  }
  if (stamps.size() < 2) throw DataError(path.string() + ": need at least 2 data rows");

  const double dt = stamps[1] - stamps[0];
  if (!(dt > 0.0)) throw CadenceError(2, "timestamps not strictly ascending");
  for (std::size_t r = 2; r < stamps.size(); ++r) {
    const double step = stamps[r] - stamps[r - 1];
    if (std::abs(step - dt) > 0.01 * dt) {
      throw CadenceError(r + 1, "step of " + std::to_string(step) + " s deviates from " +
                                    std::to_string(dt) + " s by more than 1%");
    }
  }

  const auto n = static_cast<Eigen::Index>(stamps.size());
  const auto c = static_cast<Eigen::Index>(expected_channels);
  Eigen::MatrixXd values(n, c);
  for (Eigen::Index t = 0; t < n; ++t) {
    for (Eigen::Index j = 0; j < c; ++j) values(t, j) = flat[static_cast<std::size_t>(t * c + j)];
  }
  return MultichannelSeries(std::move(values), dt, std::move(names));
}

void write_csv(const MultichannelSeries& series, const std::filesystem::path& path,
               std::int64_t start_epoch) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write CSV file " + path.string());
  out << "timestamp";
  for (const auto& name : series.channel_names()) out << ',' << name;
  out << '\n';
  char buf[40];
  for (Eigen::Index t = 0; t < series.n_samples(); ++t) {
    const auto stamp = start_epoch + static_cast<std::int64_t>(std::llround(t * series.dt()));
    out << format_iso8601(stamp);
    for (Eigen::Index j = 0; j < series.n_channels(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", series.values()(t, j));
      out << ',' << buf;
    }
    out << '\n';
  }
  if (!out) throw DataError("failed writing " + path.string());
}

}  // namespace mvmdlstm::signal
