#pragma once

#include <string>
#include <vector>

namespace mvmdlstm::pipeline {

/// Published monthly benchmark results: error metrics per method and the
/// improvement fractions of the proposed method over each baseline.
struct BenchmarkTables {
  std::vector<std::string> months;   // May .. Sep
  std::vector<std::string> methods;  // baselines first, the proposed method last
  std::vector<std::string> metrics;  // MAPE, RMSE, MAE

  // [month][metric][method]; an extra trailing month entry holds the average row.
  std::vector<std::vector<std::vector<double>>> errors;
  // [month][metric][baseline]; same trailing average entry.
  std::vector<std::vector<std::vector<double>>> improvements;

  std::size_t n_baselines() const { return methods.size() - 1; }
};

const BenchmarkTables& benchmark_tables();

struct TableCheck {
  std::string label;  // e.g. "May MAPE vs LSTM"
  double published = 0.0;
  double computed = 0.0;  // rounded to two decimals
  bool ok = false;
};

struct TableVerification {
  std::vector<TableCheck> improvements;  // monthly improvement entries
  std::vector<TableCheck> averages;      // average row of the error table
  /// Average row of the improvement table, recomputed from the averaged
  /// errors. Reported but not part of `passed`: it does not follow from the
  /// published averages (see README).
  std::vector<TableCheck> improvement_averages;

  bool passed() const;
  std::size_t failures() const;
};

/// Recomputes every derived entry from the monthly errors and compares at
/// `tolerance` after rounding half away from zero to two decimals.
TableVerification verify_tables(const BenchmarkTables& tables, double tolerance = 0.01);

}  // namespace mvmdlstm::pipeline
