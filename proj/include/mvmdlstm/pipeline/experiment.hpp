#pragma once

#include "mvmdlstm/bayes/bayes_opt.hpp"
#include "mvmdlstm/pipeline/config.hpp"
#include "mvmdlstm/pipeline/forecaster.hpp"
#include "mvmdlstm/pipeline/metrics.hpp"
#include "mvmdlstm/pipeline/windows.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <functional>
#include <optional>
#include <string>

namespace mvmdlstm::pipeline {

/// Sum over channels, as a one-channel series named "total".
signal::MultichannelSeries total_series(const signal::MultichannelSeries& series);

/// Validation MAPE of the integrated (summed) forecast for one candidate.
/// `train` holds fit + validation samples in raw units; validation starts at
/// `validation_begin`. Both parts are decomposed together, models train on
/// the fit part for config.bo_epochs epochs. A non-converged decomposition
/// still yields a value, flagged "nonconverged".
bayes::Evaluation bo_objective(const signal::MultichannelSeries& train, std::size_t validation_begin,
                               const bayes::MvmdParams& candidate, const ExperimentConfig& config,
                               const ImfTrainer& trainer = train_lstm_task);

signal::MultichannelSeries load_experiment_data(const ExperimentConfig& config);

struct ExperimentResult {
  ExperimentConfig config;
  SplitIndices split;
  std::vector<std::string> channel_names;
  std::optional<bayes::TrialHistory> history;  // empty when parameters were fixed
  bayes::MvmdParams params;
  mvmd::ModeSet train_decomposition;  // normalized training part
  ModelBundle bundle;
  std::optional<ModelBundle> total_bundle;  // direct aggregation only
  Forecast proposed;
  Forecast baseline;
  Eigen::MatrixXd actual;  // test targets x C
  Eigen::VectorXd actual_total;
  nlohmann::json report;   // deterministic for fixed config
  nlohmann::json timings;  // wall-clock seconds per phase
};

using ProgressFn = std::function<void(const std::string&)>;

/// Bayesian optimization of (K, alpha) against bo_objective on the training
/// part [0, split.train_end) of `series`.
bayes::TrialHistory tune_parameters(const signal::MultichannelSeries& series, const SplitIndices& split,
                                    const ExperimentConfig& config, const ImfTrainer& trainer = train_lstm_task,
                                    const ProgressFn& progress = {});

/// Preprocess, tune, train, forecast the test part, train the plain-LSTM
/// baseline and assemble the report. Errors carry the phase in their message.
ExperimentResult run_experiment(const ExperimentConfig& config, const ImfTrainer& trainer = train_lstm_task,
                                const ProgressFn& progress = {});

/// Builds report.json content from the forecasts in `result`.
nlohmann::json build_report(const ExperimentResult& result);

/// report.json, timings.json, forecast_vs_actual.csv, trials.csv,
/// best_params.json and models/.
void write_experiment(const ExperimentResult& result, const std::filesystem::path& dir);

}  // namespace mvmdlstm::pipeline
