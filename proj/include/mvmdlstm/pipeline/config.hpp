#pragma once

#include "mvmdlstm/bayes/bayes_opt.hpp"
#include "mvmdlstm/lstm/lstm.hpp"
#include "mvmdlstm/mvmd/mvmd.hpp"
#include "mvmdlstm/pipeline/windows.hpp"
#include "mvmdlstm/signal/synth.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

namespace mvmdlstm::pipeline {

/// How test-time inputs are decomposed.
///  split:   models train on a decomposition of the training part only; test
///           windows come from a second decomposition of train + test.
///  rolling: every test target is predicted from a fresh decomposition of
///           the samples before it. Slow.
enum class LeakageProtocol { split, rolling };

/// per_source: forecast each channel, then sum. direct: decompose and model
/// the summed series itself for the total.
enum class Aggregation { per_source, direct };

std::string to_string(LeakageProtocol p);
std::string to_string(Aggregation a);
LeakageProtocol protocol_from_string(const std::string& s);
Aggregation aggregation_from_string(const std::string& s);

struct ExperimentConfig {
  std::optional<std::filesystem::path> csv;  // data source; synthetic when empty
  std::size_t csv_channels = 3;
  signal::SynthSpec synth = signal::default_fixture_spec();

  SplitSpec split;
  std::size_t lags = 6;
  std::size_t horizon = 1;

  bayes::SearchSpace search;
  std::size_t bo_budget = 25;
  std::size_t bo_init = 5;
  std::optional<bayes::MvmdParams> fixed_params;  // skips tuning when set

  mvmd::MvmdConfig mvmd;  // modes and alpha are replaced by the tuned values
  lstm::TrainConfig train;
  int bo_epochs = 15;

  LeakageProtocol protocol = LeakageProtocol::split;
  Aggregation aggregation = Aggregation::per_source;
  bool cross_imf = false;  // model inputs: lags of all of a channel's components, not just one
  bool residual = true;    // model x - sum(IMFs) as one more component

  std::uint64_t seed = 42;
  std::size_t jobs = 1;  // concurrent trainings; does not change results

  void validate() const;
  /// Everything that influences results (jobs excluded).
  nlohmann::json to_json() const;
  /// Missing keys keep their defaults; unknown keys raise ConfigError.
  static ExperimentConfig from_json(const nlohmann::json& j);
  std::string hash() const;
};

nlohmann::json to_json(const signal::SynthSpec& spec);
signal::SynthSpec synth_spec_from_json(const nlohmann::json& j);
nlohmann::json to_json(const mvmd::MvmdConfig& cfg);
mvmd::MvmdConfig mvmd_config_from_json(const nlohmann::json& j, mvmd::MvmdConfig base = {});
nlohmann::json to_json(const lstm::TrainConfig& cfg);
lstm::TrainConfig train_config_from_json(const nlohmann::json& j, lstm::TrainConfig base = {});

/// Mixes a base seed with stream labels (splitmix64).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0);

}  // namespace mvmdlstm::pipeline
