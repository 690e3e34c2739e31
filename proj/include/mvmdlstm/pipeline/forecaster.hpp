#pragma once

#include "mvmdlstm/bayes/bayes_opt.hpp"
#include "mvmdlstm/lstm/lstm.hpp"
#include "mvmdlstm/mvmd/mvmd.hpp"
#include "mvmdlstm/signal/normalize.hpp"
#include "mvmdlstm/signal/series.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace mvmdlstm::pipeline {

struct ComponentOptions {
  bool residual = true;    // append x - sum_k IMF_k as a component
  bool cross_imf = false;  // each model sees every component of its channel
};

/// N x K' components of channel j (K' = K, or K + 1 with the residual).
Eigen::MatrixXd channel_components(const mvmd::ModeSet& modes, const Eigen::MatrixXd& source, Eigen::Index j,
                                   bool residual);

/// One model to fit: training windows and, optionally, windows to predict.
struct ImfTask {
  std::string label;  // e.g. "wind/imf3"
  lstm::Dataset fit;
  lstm::WindowBatch query;        // may be empty
  Eigen::VectorXd query_targets;  // ground truth for `query`; only oracles and stubs read it
  lstm::TrainConfig config;
};

struct ImfResult {
  lstm::LstmParams params;
  std::vector<double> loss_trace;
  Eigen::VectorXd predictions;  // one per query window
};

using ImfTrainer = std::function<ImfResult(const ImfTask&)>;

/// Trains an LSTM on task.fit and predicts task.query.
ImfResult train_lstm_task(const ImfTask& task);

/// Runs tasks on up to `jobs` threads. Results keep task order, so the
/// outcome does not depend on `jobs`. The first failing task (by index) is
/// rethrown with its label prepended.
std::vector<ImfResult> run_tasks(const std::vector<ImfTask>& tasks, const ImfTrainer& trainer, std::size_t jobs);

/// Tasks for every (channel, component) of a decomposition. Fit targets are
/// sample indices [lags + horizon - 1, fit_end); query targets [query_begin,
/// query_end) (none when query_begin >= query_end).
std::vector<ImfTask> component_tasks(const mvmd::ModeSet& modes, const Eigen::MatrixXd& source,
                                     const std::vector<std::string>& names, std::size_t lags, std::size_t horizon,
                                     std::size_t fit_end, std::size_t query_begin, std::size_t query_end,
                                     const ComponentOptions& options, const lstm::TrainConfig& config,
                                     std::uint64_t seed);

/// Trained models for one decomposed series: model[j][c] predicts component c
/// of channel j, in normalized units.
struct ModelBundle {
  bayes::MvmdParams params;
  mvmd::MvmdConfig mvmd;  // modes and alpha equal params
  std::size_t lags = 6;
  std::size_t horizon = 1;
  ComponentOptions components;
  std::vector<std::string> channel_names;
  std::vector<signal::ChannelScale> scales;
  std::vector<std::vector<lstm::LstmParams>> models;
  std::vector<std::vector<std::vector<double>>> loss_traces;

  std::size_t n_channels() const noexcept { return models.size(); }
  std::size_t n_components() const noexcept { return models.empty() ? 0 : models.front().size(); }
  std::size_t n_models() const noexcept { return n_channels() * n_components(); }
  bool operator==(const ModelBundle& other) const;
};

/// Decomposes `train` (raw units) with the given parameters and fits one
/// model per (channel, component) on all of it. The decomposition of the
/// normalized series is copied to `decomposition` when given.
ModelBundle train_full(const signal::MultichannelSeries& train, const bayes::MvmdParams& params,
                       const mvmd::MvmdConfig& mvmd, std::size_t lags, std::size_t horizon,
                       const ComponentOptions& components, const lstm::TrainConfig& config, std::uint64_t seed,
                       const ImfTrainer& trainer = train_lstm_task, std::size_t jobs = 1,
                       mvmd::ModeSet* decomposition = nullptr);

struct Forecast {
  std::vector<std::size_t> target_index;
  Eigen::MatrixXd channels;  // targets x C, original units
  Eigen::VectorXd total;     // sum over channels

  std::size_t size() const noexcept { return target_index.size(); }
};

/// Predictions for targets [begin, end) from an existing decomposition of
/// the normalized series (`source` holds the normalized values the modes
/// came from). Windows need only samples before each target.
Forecast forecast_from_modes(const ModelBundle& bundle, const mvmd::ModeSet& modes, const Eigen::MatrixXd& source,
                             std::size_t begin, std::size_t end);

/// One-step-ahead forecast after the end of `history` (raw units): decompose,
/// predict each component, sum, denormalize. Throws SplitError if the history
/// is too short.
Forecast forecast(const ModelBundle& bundle, const signal::MultichannelSeries& history);

/// bundle.json plus model_ch<j>_c<c>.bin and loss_ch<j>_c<c>.csv files.
void save_bundle(const ModelBundle& bundle, const std::filesystem::path& dir);
ModelBundle load_bundle(const std::filesystem::path& dir);

}  // namespace mvmdlstm::pipeline
