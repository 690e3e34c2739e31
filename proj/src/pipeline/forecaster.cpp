#include "mvmdlstm/pipeline/forecaster.hpp"

#include "mvmdlstm/error.hpp"
#include "mvmdlstm/pipeline/config.hpp"
#include "mvmdlstm/pipeline/windows.hpp"

#include <nlohmann/json.hpp>

#include <atomic>
#include <fstream>
#include <mutex>
#include <optional>
#include <thread>

namespace mvmdlstm::pipeline {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

MatrixXd channel_components(const mvmd::ModeSet& modes, const MatrixXd& source, Index j, bool residual) {
  const Index k = modes.n_modes();
  if (modes.n_samples() != source.rows() || j < 0 || j >= source.cols() || modes.n_channels() != source.cols()) {
    throw ConfigError("components: decomposition and source disagree in shape");
  }
  MatrixXd out(source.rows(), residual ? k + 1 : k);
  for (Index m = 0; m < k; ++m) out.col(m) = modes.modes[static_cast<std::size_t>(m)].col(j);
  if (residual) out.col(k) = source.col(j) - out.leftCols(k).rowwise().sum();
  return out;
}

ImfResult train_lstm_task(const ImfTask& task) {
  lstm::TrainResult trained = lstm::train(task.fit, task.config);
  ImfResult out;
  if (task.query.size() > 0) out.predictions = lstm::predict(trained.params, task.query);
  out.params = std::move(trained.params);
  out.loss_trace = std::move(trained.loss_trace);
  return out;
}

std::vector<ImfResult> run_tasks(const std::vector<ImfTask>& tasks, const ImfTrainer& trainer, std::size_t jobs) {
  std::vector<ImfResult> results(tasks.size());
  std::vector<std::optional<std::pair<ErrorKind, std::string>>> failures(tasks.size());
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++) {
      try {
        results[i] = trainer(tasks[i]);
      } catch (const Error& e) {
        failures[i] = {e.kind(), e.what()};
      } catch (const std::exception& e) {
        failures[i] = {ErrorKind::numeric, e.what()};
      }
    }
  };
  const std::size_t threads = std::min(std::max<std::size_t>(jobs, 1), tasks.size());
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    if (failures[i]) throw Error(failures[i]->first, tasks[i].label + ": " + failures[i]->second);
  }
  return results;
}

namespace {

std::string component_label(const std::vector<std::string>& names, Index j, Index c, Index k) {
  return names[static_cast<std::size_t>(j)] + (c < k ? "/imf" + std::to_string(c + 1) : std::string("/residual"));
}

// Inputs for target index t: rows [t - horizon - lags + 1, t - horizon] of `features`.
lstm::WindowBatch gather_windows(const MatrixXd& features, const std::vector<std::size_t>& targets, std::size_t lags,
                                 std::size_t horizon) {
  const Index d = features.cols();
  const auto l = static_cast<Index>(lags);
  MatrixXd flat(static_cast<Index>(targets.size()), l * d);
  for (std::size_t r = 0; r < targets.size(); ++r) {
    const std::size_t t = targets[r];
    if (t + 1 < horizon + lags || t + 1 - horizon > static_cast<std::size_t>(features.rows())) {
      throw SplitError("forecast: not enough history for target index " + std::to_string(t));
    }
    const auto start = static_cast<Index>(t + 1 - horizon - lags);
    for (Index s = 0; s < l; ++s) flat.row(static_cast<Index>(r)).segment(s * d, d) = features.row(start + s);
  }
  return {std::move(flat), l, d};
}

MatrixXd model_inputs(const MatrixXd& comps, Index c, bool cross_imf) {
  return cross_imf ? comps : MatrixXd(comps.col(c));
}

}  // namespace

std::vector<ImfTask> component_tasks(const mvmd::ModeSet& modes, const MatrixXd& source,
                                     const std::vector<std::string>& names, std::size_t lags, std::size_t horizon,
                                     std::size_t fit_end, std::size_t query_begin, std::size_t query_end,
                                     const ComponentOptions& options, const lstm::TrainConfig& config,
                                     std::uint64_t seed) {
  std::vector<ImfTask> tasks;
  const Index k = modes.n_modes();
  for (Index j = 0; j < source.cols(); ++j) {
    const MatrixXd comps = channel_components(modes, source, j, options.residual);
    for (Index c = 0; c < comps.cols(); ++c) {
      const MatrixXd inputs = model_inputs(comps, c, options.cross_imf);
      ImfTask task;
      task.label = component_label(names, j, c, k);
      task.fit = make_windows(inputs, comps.col(c), lags, horizon, 0, fit_end).data;
      if (query_begin < query_end) {
        const auto q = make_windows(inputs, comps.col(c), lags, horizon, query_begin, query_end);
        task.query = q.data.windows;
        task.query_targets = q.data.targets;
      }
      task.config = config;
      task.config.seed = derive_seed(seed, static_cast<std::uint64_t>(j), static_cast<std::uint64_t>(c));
      tasks.push_back(std::move(task));
    }
  }
  return tasks;
}

bool ModelBundle::operator==(const ModelBundle& o) const {
  if (!(params == o.params) || lags != o.lags || horizon != o.horizon ||
      components.residual != o.components.residual || components.cross_imf != o.components.cross_imf ||
      channel_names != o.channel_names || models != o.models || loss_traces != o.loss_traces ||
      scales.size() != o.scales.size()) {
    return false;
  }
  if (pipeline::to_json(mvmd) != pipeline::to_json(o.mvmd)) return false;
  for (std::size_t j = 0; j < scales.size(); ++j) {
    if (scales[j].min != o.scales[j].min || scales[j].max != o.scales[j].max) return false;
  }
  return true;
}

ModelBundle train_full(const signal::MultichannelSeries& train, const bayes::MvmdParams& params,
                       const mvmd::MvmdConfig& mvmd_cfg, std::size_t lags, std::size_t horizon,
                       const ComponentOptions& components, const lstm::TrainConfig& config, std::uint64_t seed,
                       const ImfTrainer& trainer, std::size_t jobs, mvmd::ModeSet* decomposition) {
  ModelBundle bundle;
  bundle.params = params;
  bundle.mvmd = mvmd_cfg;
  bundle.mvmd.modes = params.modes;
  bundle.mvmd.alpha = params.alpha;
  bundle.lags = lags;
  bundle.horizon = horizon;
  bundle.components = components;
  bundle.channel_names = train.channel_names();

  auto [normalized, scales] = signal::min_max_normalize(train);
  bundle.scales = std::move(scales);
  const mvmd::ModeSet modes = mvmd::decompose(normalized, bundle.mvmd);
  const std::size_t n = train.n_samples();
  const auto tasks = component_tasks(modes, normalized.values(), bundle.channel_names, lags, horizon, n, 0, 0,
                                     components, config, seed);
  auto results = run_tasks(tasks, trainer, jobs);
  if (decomposition) *decomposition = modes;

  const std::size_t per_channel = tasks.size() / train.n_channels();
  bundle.models.assign(train.n_channels(), {});
  bundle.loss_traces.assign(train.n_channels(), {});
  for (std::size_t i = 0; i < results.size(); ++i) {
    bundle.models[i / per_channel].push_back(std::move(results[i].params));
    bundle.loss_traces[i / per_channel].push_back(std::move(results[i].loss_trace));
  }
  return bundle;
}

Forecast forecast_from_modes(const ModelBundle& bundle, const mvmd::ModeSet& modes, const MatrixXd& source,
                             std::size_t begin, std::size_t end) {
  if (end <= begin) throw ConfigError("forecast: empty target range");
  if (static_cast<std::size_t>(source.cols()) != bundle.n_channels()) {
    throw ConfigError("forecast: channel count does not match the bundle");
  }
  if (modes.n_modes() != bundle.params.modes) throw ConfigError("forecast: mode count does not match the bundle");

  Forecast out;
  for (std::size_t t = begin; t < end; ++t) out.target_index.push_back(t);
  const auto q = static_cast<Index>(out.size());
  out.channels = MatrixXd::Zero(q, source.cols());
  for (Index j = 0; j < source.cols(); ++j) {
    const MatrixXd comps = channel_components(modes, source, j, bundle.components.residual);
    if (static_cast<std::size_t>(comps.cols()) != bundle.n_components()) {
      throw ConfigError("forecast: component count does not match the bundle");
    }
    VectorXd sum = VectorXd::Zero(q);
    for (Index c = 0; c < comps.cols(); ++c) {
      const auto windows =
          gather_windows(model_inputs(comps, c, bundle.components.cross_imf), out.target_index, bundle.lags,
                         bundle.horizon);
      sum += lstm::predict(bundle.models[static_cast<std::size_t>(j)][static_cast<std::size_t>(c)], windows);
    }
    const auto& s = bundle.scales[static_cast<std::size_t>(j)];
    out.channels.col(j) = (s.min + sum.array() * s.span()).matrix();
  }
  out.total = out.channels.rowwise().sum();
  return out;
}

Forecast forecast(const ModelBundle& bundle, const signal::MultichannelSeries& history) {
  const std::size_t n = history.n_samples();
  if (n < bundle.lags) throw SplitError("forecast: history shorter than the lag count");
  const auto normalized = signal::apply_scales(history, bundle.scales);
  const mvmd::ModeSet modes = mvmd::decompose(normalized, bundle.mvmd);
  return forecast_from_modes(bundle, modes, normalized.values(), n - 1 + bundle.horizon, n + bundle.horizon);
}

namespace {

std::string model_stem(std::size_t j, std::size_t c) {
  return "ch" + std::to_string(j + 1) + "_c" + std::to_string(c + 1);
}

std::vector<double> read_loss(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  std::vector<double> out;
  while (std::getline(in, line)) {
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw DataError(path.string() + ": malformed line");
    out.push_back(std::stod(line.substr(comma + 1)));
  }
  return out;
}

}  // namespace

void save_bundle(const ModelBundle& bundle, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  nlohmann::json j;
  j["K"] = bundle.params.modes;
  j["alpha"] = bundle.params.alpha;
  j["mvmd"] = to_json(bundle.mvmd);
  j["lags"] = bundle.lags;
  j["horizon"] = bundle.horizon;
  j["residual"] = bundle.components.residual;
  j["cross_imf"] = bundle.components.cross_imf;
  j["channels"] = bundle.channel_names;
  nlohmann::json scales = nlohmann::json::array();
  for (const auto& s : bundle.scales) scales.push_back({{"min", s.min}, {"max", s.max}});
  j["scales"] = scales;
  j["components"] = bundle.n_components();
  std::ofstream out(dir / "bundle.json");
  if (!out) throw DataError("cannot write " + (dir / "bundle.json").string());
  out << j.dump(2) << '\n';
  for (std::size_t ch = 0; ch < bundle.n_channels(); ++ch) {
    for (std::size_t c = 0; c < bundle.n_components(); ++c) {
      lstm::save_params(bundle.models[ch][c], dir / ("model_" + model_stem(ch, c) + ".bin"));
      lstm::write_loss_trace(bundle.loss_traces[ch][c], dir / ("loss_" + model_stem(ch, c) + ".csv"));
    }
  }
}

ModelBundle load_bundle(const std::filesystem::path& dir) {
  std::ifstream in(dir / "bundle.json");
  if (!in) throw DataError("cannot open " + (dir / "bundle.json").string());
  nlohmann::json j;
  try {
    in >> j;
    ModelBundle b;
    b.params.modes = j.at("K").get<int>();
    b.params.alpha = j.at("alpha").get<double>();
    b.mvmd = mvmd_config_from_json(j.at("mvmd"));
    b.lags = j.at("lags").get<std::size_t>();
    b.horizon = j.at("horizon").get<std::size_t>();
    b.components.residual = j.at("residual").get<bool>();
    b.components.cross_imf = j.at("cross_imf").get<bool>();
    b.channel_names = j.at("channels").get<std::vector<std::string>>();
    for (const auto& s : j.at("scales")) b.scales.push_back({s.at("min").get<double>(), s.at("max").get<double>()});
    const auto comps = j.at("components").get<std::size_t>();
    if (b.scales.size() != b.channel_names.size()) throw DataError("bundle.json: scales and channels disagree");
    b.models.assign(b.channel_names.size(), {});
    b.loss_traces.assign(b.channel_names.size(), {});
    for (std::size_t ch = 0; ch < b.channel_names.size(); ++ch) {
      for (std::size_t c = 0; c < comps; ++c) {
        b.models[ch].push_back(lstm::load_params(dir / ("model_" + model_stem(ch, c) + ".bin")));
        b.loss_traces[ch].push_back(read_loss(dir / ("loss_" + model_stem(ch, c) + ".csv")));
      }
    }
    return b;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("bundle.json: " + std::string(e.what()));
  }
}

}  // namespace mvmdlstm::pipeline
