#include "mvmdlstm/pipeline/experiment.hpp"

#include "mvmdlstm/error.hpp"
#include "mvmdlstm/signal/csv_io.hpp"
#include "mvmdlstm/signal/normalize.hpp"
#include "mvmdlstm/signal/synth.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>

namespace mvmdlstm::pipeline {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using nlohmann::json;

namespace {

// Seed streams.
constexpr std::uint64_t kStreamBo = 1;
constexpr std::uint64_t kStreamBoModels = 2;
constexpr std::uint64_t kStreamModels = 3;
constexpr std::uint64_t kStreamTotalModels = 4;
constexpr std::uint64_t kStreamBaseline = 5;

class PhaseTimer {
 public:
  explicit PhaseTimer(json& sink) : sink_(sink) {}

  template <typename F>
  auto run(const std::string& phase, const ProgressFn& progress, F&& body) {
    if (progress) progress(phase);
    const auto start = std::chrono::steady_clock::now();
    try {
      if constexpr (std::is_void_v<decltype(body())>) {
        body();
        record(phase, start);
      } else {
        auto out = body();
        record(phase, start);
        return out;
      }
    } catch (const PhaseError&) {
      throw;
    } catch (const Error& e) {
      throw PhaseError(phase, e);
    }
  }

 private:
  void record(const std::string& phase, std::chrono::steady_clock::time_point start) {
    sink_[phase] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
  json& sink_;
};

mvmd::MvmdConfig with_params(mvmd::MvmdConfig cfg, const bayes::MvmdParams& p) {
  cfg.modes = p.modes;
  cfg.alpha = p.alpha;
  return cfg;
}

ComponentOptions component_options(const ExperimentConfig& cfg) { return {cfg.residual, cfg.cross_imf}; }

json metric_json(const MetricSet& m) { return {{"mape", m.mape}, {"rmse", m.rmse}, {"mae", m.mae}}; }

double series_max(const VectorXd& v) { return v.maxCoeff(); }

}  // namespace

signal::MultichannelSeries total_series(const signal::MultichannelSeries& series) {
  return signal::MultichannelSeries(MatrixXd(series.values().rowwise().sum()), series.dt(), {"total"});
}

bayes::Evaluation bo_objective(const signal::MultichannelSeries& train, std::size_t validation_begin,
                               const bayes::MvmdParams& candidate, const ExperimentConfig& config,
                               const ImfTrainer& trainer) {
  const std::size_t n = train.n_samples();
  if (validation_begin >= n) throw ConfigError("BO objective: empty validation part");
  const signal::MultichannelSeries source =
      config.aggregation == Aggregation::direct ? total_series(train) : train;
  auto [normalized, scales] = signal::min_max_normalize(source);
  const mvmd::ModeSet modes = mvmd::decompose(normalized, with_params(config.mvmd, candidate));

  lstm::TrainConfig fast = config.train;
  fast.epochs = config.bo_epochs;
  const auto tasks = component_tasks(modes, normalized.values(), source.channel_names(), config.lags, config.horizon,
                                     validation_begin, validation_begin, n, component_options(config), fast,
                                     derive_seed(config.seed, kStreamBoModels));
  const auto results = run_tasks(tasks, trainer, config.jobs);

  const std::size_t per_channel = tasks.size() / source.n_channels();
  const Index q = tasks.front().query.size();
  VectorXd predicted_total = VectorXd::Zero(q);
  for (Index j = 0; j < static_cast<Index>(source.n_channels()); ++j) {
    VectorXd sum = VectorXd::Zero(q);
    for (std::size_t c = 0; c < per_channel; ++c) {
      sum += results[static_cast<std::size_t>(j) * per_channel + c].predictions;
    }
    const auto& s = scales[static_cast<std::size_t>(j)];
    predicted_total.array() += s.min + sum.array() * s.span();
  }
  const VectorXd total = train.values().rowwise().sum();
  const VectorXd actual = total.segment(static_cast<Index>(validation_begin), q);
  bayes::Evaluation e;
  e.value = mape(actual, predicted_total, series_max(total));
  e.flag = modes.converged ? bayes::kFlagOk : "nonconverged";
  return e;
}

signal::MultichannelSeries load_experiment_data(const ExperimentConfig& config) {
  if (config.csv) return signal::load_csv(*config.csv, config.csv_channels);
  return signal::synth(config.synth);
}

namespace {

Forecast test_forecast(const ModelBundle& bundle, const signal::MultichannelSeries& full, const SplitIndices& split,
                       LeakageProtocol protocol) {
  const auto normalized = signal::apply_scales(full, bundle.scales);
  if (protocol == LeakageProtocol::split) {
    const mvmd::ModeSet modes = mvmd::decompose(normalized, bundle.mvmd);
    return forecast_from_modes(bundle, modes, normalized.values(), split.train_end, split.n);
  }
  Forecast out;
  out.channels.resize(static_cast<Index>(split.n - split.train_end), normalized.n_channels());
  for (std::size_t t = split.train_end; t < split.n; ++t) {
    const auto prefix = normalized.slice(0, static_cast<Index>(t));
    const mvmd::ModeSet modes = mvmd::decompose(prefix, bundle.mvmd);
    const Forecast one = forecast_from_modes(bundle, modes, prefix.values(), t, t + 1);
    out.target_index.push_back(t);
    out.channels.row(static_cast<Index>(t - split.train_end)) = one.channels.row(0);
  }
  out.total = out.channels.rowwise().sum();
  return out;
}

Forecast baseline_forecast(const signal::MultichannelSeries& full, const SplitIndices& split,
                           const ExperimentConfig& config, const ImfTrainer& trainer) {
  const auto train = full.slice(0, static_cast<Index>(split.train_end));
  const auto [normalized_train, scales] = signal::min_max_normalize(train);
  const auto normalized = signal::apply_scales(full, scales);
  std::vector<ImfTask> tasks;
  for (Index j = 0; j < full.n_channels(); ++j) {
    const VectorXd x = normalized.values().col(j);
    ImfTask task;
    task.label = full.channel_names()[static_cast<std::size_t>(j)] + "/baseline";
    task.fit = make_windows(x, x, config.lags, config.horizon, 0, split.train_end).data;
    const auto q = make_windows(x, x, config.lags, config.horizon, split.train_end, split.n);
    task.query = q.data.windows;
    task.query_targets = q.data.targets;
    task.config = config.train;
    task.config.seed = derive_seed(config.seed, kStreamBaseline, static_cast<std::uint64_t>(j));
    tasks.push_back(std::move(task));
  }
  const auto results = run_tasks(tasks, trainer, config.jobs);
  Forecast out;
  for (std::size_t t = split.train_end; t < split.n; ++t) out.target_index.push_back(t);
  out.channels.resize(static_cast<Index>(out.size()), full.n_channels());
  for (Index j = 0; j < full.n_channels(); ++j) {
    const auto& s = scales[static_cast<std::size_t>(j)];
    out.channels.col(j) = (s.min + results[static_cast<std::size_t>(j)].predictions.array() * s.span()).matrix();
  }
  out.total = out.channels.rowwise().sum();
  return out;
}

}  // namespace

bayes::TrialHistory tune_parameters(const signal::MultichannelSeries& series, const SplitIndices& split,
                                    const ExperimentConfig& config, const ImfTrainer& trainer,
                                    const ProgressFn& progress) {
  const auto train = series.slice(0, static_cast<Index>(split.train_end));
  bayes::MinimizeOptions opts;
  opts.budget = config.bo_budget;
  opts.n_init = config.bo_init;
  opts.seed = derive_seed(config.seed, kStreamBo);
  if (progress) {
    opts.on_trial = [&](const bayes::Trial& t, std::size_t i) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "trial %zu/%zu K=%d alpha=%.1f objective=%.6g %s", i + 1, config.bo_budget,
                    t.params.modes, t.params.alpha, t.objective, t.flag.c_str());
      progress(buf);
    };
  }
  const auto objective = [&](const bayes::MvmdParams& p) {
    return bo_objective(train, split.validation_begin, p, config, trainer);
  };
  return bayes::minimize(objective, config.search, opts);
}

ExperimentResult run_experiment(const ExperimentConfig& config, const ImfTrainer& trainer,
                                const ProgressFn& progress) {
  config.validate();
  ExperimentResult r;
  r.config = config;
  PhaseTimer timer(r.timings);
  const auto run_start = std::chrono::steady_clock::now();

  const auto full = timer.run("preprocess", progress, [&] {
    auto series = load_experiment_data(config);
    r.split = split_indices(series.n_samples(), config.split, config.lags);
    return series;
  });
  r.channel_names = full.channel_names();
  const auto train = full.slice(0, static_cast<Index>(r.split.train_end));

  r.params = timer.run("tune", progress, [&] {
    if (config.fixed_params) return *config.fixed_params;
    r.history = tune_parameters(full, r.split, config, trainer, progress);
    return r.history->best().params;
  });

  timer.run("train", progress, [&] {
    const auto mv = with_params(config.mvmd, r.params);
    r.bundle = train_full(train, r.params, mv, config.lags, config.horizon, component_options(config), config.train,
                          derive_seed(config.seed, kStreamModels), trainer, config.jobs, &r.train_decomposition);
    if (config.aggregation == Aggregation::direct) {
      r.total_bundle = train_full(total_series(train), r.params, mv, config.lags, config.horizon,
                                  component_options(config), config.train,
                                  derive_seed(config.seed, kStreamTotalModels), trainer, config.jobs);
    }
  });

  timer.run("forecast", progress, [&] {
    r.proposed = test_forecast(r.bundle, full, r.split, config.protocol);
    if (r.total_bundle) {
      r.proposed.total = test_forecast(*r.total_bundle, total_series(full), r.split, config.protocol).total;
    }
  });

  timer.run("baseline", progress, [&] { r.baseline = baseline_forecast(full, r.split, config, trainer); });

  timer.run("report", progress, [&] {
    const auto test_rows = static_cast<Index>(r.split.n - r.split.train_end);
    r.actual = full.values().bottomRows(test_rows);
    r.actual_total = r.actual.rowwise().sum();
    r.report = build_report(r);
  });
  r.timings["total"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - run_start).count();
  return r;
}

json build_report(const ExperimentResult& r) {
  const ExperimentConfig& cfg = r.config;
  const auto full = load_experiment_data(cfg);
  const MatrixXd& values = full.values();
  const VectorXd total = values.rowwise().sum();

  json metrics = {{"proposed", json::object()}, {"baseline", json::object()}};
  json improvements = json::object();
  auto record = [&](const std::string& name, const VectorXd& actual, const VectorXd& proposed,
                    const VectorXd& baseline, double y_max) {
    const MetricSet p = evaluate_metrics(actual, proposed, y_max);
    const MetricSet b = evaluate_metrics(actual, baseline, y_max);
    // Equal for constant errors; allow for rounding in either direction.
    auto below = [](const MetricSet& m) { return m.rmse < m.mae * (1.0 - 1e-12); };
    if (below(p) || below(b)) throw NumericError("report: RMSE below MAE for " + name);
    metrics["proposed"][name] = metric_json(p);
    metrics["baseline"][name] = metric_json(b);
    improvements[name] = metric_json(improvement(b, p));
  };
  for (Index j = 0; j < values.cols(); ++j) {
    record(r.channel_names[static_cast<std::size_t>(j)], r.actual.col(j), r.proposed.channels.col(j),
           r.baseline.channels.col(j), values.col(j).maxCoeff());
  }
  record("total", r.actual_total, r.proposed.total, r.baseline.total, total.maxCoeff());

  json tuning = {{"K", r.params.modes}, {"alpha", r.params.alpha}, {"tuned", r.history.has_value()}};
  if (r.history) {
    tuning["objective"] = r.history->best().objective;
    tuning["trials"] = r.history->trials.size();
    tuning["surrogate_fits"] = r.history->surrogate_fits;
    std::size_t failed = 0;
    for (const auto& t : r.history->trials) failed += t.failed() ? 1 : 0;
    tuning["failed_trials"] = failed;
  }
  const auto& d = r.train_decomposition;
  json decomposition = {{"omega", std::vector<double>(d.omega.data(), d.omega.data() + d.omega.size())},
                        {"converged", d.converged},
                        {"iterations", d.iterations_run},
                        {"final_residual", d.final_residual},
                        {"reconstruction_error", d.reconstruction_error}};
  json final_losses = json::object();
  for (std::size_t j = 0; j < r.bundle.n_channels(); ++j) {
    std::vector<double> last;
    for (const auto& trace : r.bundle.loss_traces[j]) last.push_back(trace.empty() ? 0.0 : trace.back());
    final_losses[r.channel_names[j]] = last;
  }

  return {{"config_hash", cfg.hash()},
          {"seed", cfg.seed},
          {"data",
           {{"source", cfg.csv ? cfg.csv->string() : std::string("synthetic")},
            {"n_samples", r.split.n},
            {"channels", r.channel_names},
            {"split", {{"validation_begin", r.split.validation_begin}, {"train_end", r.split.train_end}}},
            {"test_targets", r.proposed.size()}}},
          {"protocol", to_string(cfg.protocol)},
          {"aggregation", to_string(cfg.aggregation)},
          {"tuning", tuning},
          {"decomposition", decomposition},
          {"models", {{"count", r.bundle.n_models() + (r.total_bundle ? r.total_bundle->n_models() : 0)},
                      {"final_mse", final_losses}}},
          {"metrics", metrics},
          {"improvement_vs_baseline", improvements}};
}

void write_experiment(const ExperimentResult& r, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto write_json = [&](const json& j, const char* name) {
    std::ofstream out(dir / name);
    if (!out) throw DataError("cannot write " + (dir / name).string());
    out << j.dump(2) << '\n';
  };
  write_json(r.report, "report.json");
  write_json(r.timings, "timings.json");
  if (r.history) {
    bayes::write_trials_csv(*r.history, dir / "trials.csv");
    bayes::write_best_params(*r.history, dir / "best_params.json");
  }
  save_bundle(r.bundle, dir / "models");
  if (r.total_bundle) save_bundle(*r.total_bundle, dir / "models_total");

  std::ofstream out(dir / "forecast_vs_actual.csv");
  if (!out) throw DataError("cannot write " + (dir / "forecast_vs_actual.csv").string());
  out << 't';
  for (const auto& name : r.channel_names) out << ",actual_" << name << ",pred_" << name;
  out << ",actual_total,pred_total,baseline_total\n";
  char buf[64];
  for (Index i = 0; i < static_cast<Index>(r.proposed.size()); ++i) {
    out << r.proposed.target_index[static_cast<std::size_t>(i)];
    for (Index j = 0; j < r.actual.cols(); ++j) {
      std::snprintf(buf, sizeof buf, ",%.17g,%.17g", r.actual(i, j), r.proposed.channels(i, j));
      out << buf;
    }
    std::snprintf(buf, sizeof buf, ",%.17g,%.17g", r.actual_total[i], r.proposed.total[i]);
    out << buf;
    std::snprintf(buf, sizeof buf, ",%.17g\n", r.baseline.total[i]);
    out << buf;
  }
}

}  // namespace mvmdlstm::pipeline
