#include "mvmdlstm/pipeline/tables.hpp"

#include "mvmdlstm/error.hpp"
#include "mvmdlstm/pipeline/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace mvmdlstm::pipeline {

const BenchmarkTables& benchmark_tables() {
  static const BenchmarkTables tables = [] {
    BenchmarkTables t;
    t.months = {"May", "Jun", "Jul", "Aug", "Sep"};
    t.methods = {"SVR", "ANN", "RF", "CNN", "ResNet", "LSTM", "VMD-LSTM", "Proposed"};
    t.metrics = {"MAPE", "RMSE", "MAE"};
    t.errors = {
        {{5.00, 5.09, 4.94, 6.25, 5.90, 4.89, 3.20, 1.68},
         {5.62, 5.31, 5.36, 6.60, 6.16, 5.28, 3.32, 1.83},
         {3.31, 3.37, 3.28, 4.15, 3.91, 3.24, 2.12, 1.11}},
        {{6.33, 6.53, 6.77, 7.62, 8.15, 6.50, 3.30, 2.84},
         {5.79, 5.74, 5.96, 6.68, 7.14, 5.77, 3.60, 2.49},
         {4.20, 4.33, 4.49, 5.06, 5.40, 4.31, 2.19, 1.88}},
        {{4.70, 5.23, 4.84, 5.49, 6.13, 4.91, 2.89, 2.46},
         {4.51, 4.82, 4.51, 5.17, 5.63, 4.61, 2.76, 2.15},
         {3.12, 3.47, 3.21, 3.64, 4.07, 3.25, 1.91, 1.63}},
        {{1.63, 2.35, 1.32, 1.81, 1.39, 1.14, 0.82, 0.76},
         {1.83, 2.20, 1.97, 2.52, 2.00, 1.78, 1.12, 1.03},
         {1.08, 1.56, 0.88, 1.20, 0.92, 0.76, 0.54, 0.50}},
        {{3.15, 3.13, 3.40, 3.88, 3.21, 2.90, 1.49, 1.00},
         {3.60, 3.67, 3.71, 4.21, 3.88, 3.65, 1.86, 1.12},
         {2.09, 2.07, 2.39, 2.57, 2.13, 1.93, 0.99, 0.67}},
        {{4.16, 4.47, 4.25, 5.01, 4.96, 4.07, 2.34, 1.75},
         {4.27, 4.35, 4.30, 5.04, 4.96, 4.22, 2.53, 1.72},
         {2.76, 2.96, 2.85, 3.32, 3.29, 2.70, 1.55, 1.16}},
    };
    t.improvements = {
        {{0.66, 0.67, 0.66, 0.73, 0.72, 0.66, 0.48},
         {0.67, 0.66, 0.66, 0.72, 0.70, 0.65, 0.45},
         {0.66, 0.67, 0.66, 0.73, 0.72, 0.66, 0.48}},
        {{0.55, 0.57, 0.58, 0.63, 0.65, 0.56, 0.14},
         {0.57, 0.57, 0.58, 0.63, 0.65, 0.57, 0.31},
         {0.55, 0.57, 0.58, 0.63, 0.65, 0.56, 0.14}},
        {{0.48, 0.53, 0.49, 0.55, 0.60, 0.50, 0.15},
         {0.52, 0.55, 0.52, 0.58, 0.62, 0.53, 0.22},
         {0.48, 0.53, 0.49, 0.55, 0.60, 0.50, 0.15}},
        {{0.53, 0.68, 0.42, 0.58, 0.45, 0.33, 0.07},
         {0.44, 0.53, 0.48, 0.59, 0.49, 0.42, 0.08},
         {0.54, 0.68, 0.43, 0.58, 0.46, 0.34, 0.07}},
        {{0.68, 0.68, 0.71, 0.74, 0.69, 0.66, 0.33},
         {0.69, 0.69, 0.70, 0.73, 0.71, 0.69, 0.40},
         {0.68, 0.68, 0.72, 0.74, 0.69, 0.65, 0.32}},
        {{0.60, 0.61, 0.59, 0.65, 0.65, 0.57, 0.25},
         {0.60, 0.61, 0.60, 0.66, 0.65, 0.59, 0.32},
         {0.58, 0.61, 0.59, 0.65, 0.65, 0.57, 0.25}},
    };
    return t;
  }();
  return tables;
}

bool TableVerification::passed() const { return failures() == 0 && !improvements.empty(); }

std::size_t TableVerification::failures() const {
  auto bad = [](const std::vector<TableCheck>& v) {
    return static_cast<std::size_t>(std::count_if(v.begin(), v.end(), [](const TableCheck& c) { return !c.ok; }));
  };
  return bad(improvements) + bad(averages);
}

namespace {

void check_shapes(const BenchmarkTables& t) {
  const std::size_t rows = t.months.size() + 1;
  if (t.methods.size() < 2 || t.metrics.empty() || t.errors.size() != rows || t.improvements.size() != rows) {
    throw ConfigError("benchmark tables: inconsistent shapes");
  }
  for (std::size_t m = 0; m < rows; ++m) {
    if (t.errors[m].size() != t.metrics.size() || t.improvements[m].size() != t.metrics.size()) {
      throw ConfigError("benchmark tables: inconsistent metric rows");
    }
    for (std::size_t k = 0; k < t.metrics.size(); ++k) {
      if (t.errors[m][k].size() != t.methods.size() || t.improvements[m][k].size() != t.n_baselines()) {
        throw ConfigError("benchmark tables: inconsistent method columns");
      }
    }
  }
}

TableCheck make_check(std::string label, double published, double raw, double tolerance) {
  const double rounded = round_half_away(raw, 2);
  return {std::move(label), published, rounded, std::abs(rounded - published) <= tolerance + 1e-9};
}

}  // namespace

TableVerification verify_tables(const BenchmarkTables& t, double tolerance) {
  check_shapes(t);
  TableVerification out;
  const std::size_t months = t.months.size();
  const std::size_t proposed = t.methods.size() - 1;

  for (std::size_t m = 0; m < months; ++m) {
    for (std::size_t k = 0; k < t.metrics.size(); ++k) {
      for (std::size_t b = 0; b < t.n_baselines(); ++b) {
        const double raw = improvement(t.errors[m][k][b], t.errors[m][k][proposed]);
        out.improvements.push_back(make_check(t.months[m] + " " + t.metrics[k] + " vs " + t.methods[b],
                                              t.improvements[m][k][b], raw, tolerance));
      }
    }
  }
  for (std::size_t k = 0; k < t.metrics.size(); ++k) {
    for (std::size_t j = 0; j < t.methods.size(); ++j) {
      std::vector<double> column(months);
      for (std::size_t m = 0; m < months; ++m) column[m] = t.errors[m][k][j];
      out.averages.push_back(make_check("Average " + t.metrics[k] + " " + t.methods[j],
                                        t.errors[months][k][j], monthly_average(column), tolerance));
    }
    for (std::size_t b = 0; b < t.n_baselines(); ++b) {
      const double raw = improvement(t.errors[months][k][b], t.errors[months][k][proposed]);
      out.improvement_averages.push_back(make_check("Average " + t.metrics[k] + " vs " + t.methods[b],
                                                    t.improvements[months][k][b], raw, tolerance));
    }
  }
  return out;
}

}  // namespace mvmdlstm::pipeline
