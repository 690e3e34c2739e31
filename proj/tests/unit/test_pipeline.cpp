#include <catch_amalgamated.hpp>

#include "mvmdlstm/error.hpp"
#include "mvmdlstm/pipeline/config.hpp"
#include "mvmdlstm/pipeline/experiment.hpp"
#include "mvmdlstm/pipeline/forecaster.hpp"
#include "mvmdlstm/pipeline/metrics.hpp"
#include "mvmdlstm/pipeline/tables.hpp"
#include "mvmdlstm/pipeline/windows.hpp"
#include "mvmdlstm/signal/synth.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

using namespace mvmdlstm;
using namespace mvmdlstm::pipeline;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

VectorXd vec(std::initializer_list<double> v) {
  VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

signal::MultichannelSeries ramp_series(Eigen::Index n, Eigen::Index c) {
  MatrixXd x(n, c);
  for (Eigen::Index t = 0; t < n; ++t) {
    for (Eigen::Index j = 0; j < c; ++j) x(t, j) = static_cast<double>(t * c + j);
  }
  return signal::MultichannelSeries(x);
}

// Returns the true component values, so forecasts are exact.
ImfResult perfect_trainer(const ImfTask& task) {
  ImfResult r;
  r.params = lstm::LstmParams(1, task.fit.windows.features);
  r.loss_trace = {0.0};
  r.predictions = task.query_targets;
  return r;
}

ExperimentConfig tiny_config() {
  ExperimentConfig c;
  c.synth = signal::default_fixture_spec(5);
  c.synth.n_samples = 500;
  c.search.k_min = 2;
  c.search.k_max = 4;
  c.bo_budget = 3;
  c.bo_init = 2;
  c.train.hidden_size = 4;
  c.train.epochs = 2;
  c.bo_epochs = 1;
  c.mvmd.max_iter = 60;
  return c;
}

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("mvmdlstm_pipeline_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("chronological split arithmetic", "[split]") {
  const auto idx = split_indices(1000, SplitSpec{}, 6);
  REQUIRE(idx.train_end == 800);
  REQUIRE(idx.validation_begin == 700);
  REQUIRE(idx.n == 1000);
  REQUIRE_THROWS_AS(split_indices(10, SplitSpec{}, 6), SplitError);
  REQUIRE_THROWS_AS(split_indices(10, SplitSpec{}, 6), DataError);
  SplitSpec bad;
  bad.train_fraction = 1.0;
  REQUIRE_THROWS_AS(split_indices(1000, bad, 6), ConfigError);
}

TEST_CASE("split partitions reassemble the series", "[split]") {
  const auto s = ramp_series(1000, 2);
  const auto sp = chronological_split(s, SplitSpec{}, 6);
  REQUIRE(sp.train.n_samples() == 800);
  REQUIRE(sp.validation.n_samples() == 100);
  REQUIRE(sp.test.n_samples() == 200);
  MatrixXd joined(1000, 2);
  joined << sp.train.values(), sp.test.values();
  REQUIRE(joined == s.values());
  REQUIRE(sp.validation.values() == sp.train.values().bottomRows(100));
}

TEST_CASE("window count and layout", "[windows]") {
  REQUIRE(make_windows(VectorXd::LinSpaced(10, 1, 10), 6).size() == 4);
  const auto w = make_windows(VectorXd::LinSpaced(8, 1, 8), 6);
  REQUIRE(w.size() == 2);
  REQUIRE(w.data.windows.window(0).col(0) == VectorXd::LinSpaced(6, 1, 6));
  REQUIRE(w.data.targets[0] == 7.0);
  REQUIRE(w.target_index[0] == 6);
  REQUIRE(make_windows(VectorXd::LinSpaced(10, 1, 10), 3, 2).size() == 6);
  REQUIRE_THROWS_AS(make_windows(VectorXd::LinSpaced(6, 1, 6), 6), SplitError);
}

TEST_CASE("windows never read at or after their target", "[windows][property]") {
  const VectorXd idx = VectorXd::LinSpaced(50, 0, 49);  // value == sample index
  for (std::size_t lags : {1u, 3u, 6u}) {
    for (std::size_t horizon : {1u, 2u, 4u}) {
      const auto w = make_windows(idx, lags, horizon);
      REQUIRE(w.size() == 50 - lags - horizon + 1);
      for (std::size_t m = 0; m < w.size(); ++m) {
        const auto t = static_cast<double>(w.target_index[m]);
        REQUIRE(w.data.targets[static_cast<Eigen::Index>(m)] == t);
        const VectorXd win = w.data.windows.inputs.row(static_cast<Eigen::Index>(m)).transpose();
        REQUIRE(win.maxCoeff() <= t - static_cast<double>(horizon));
        REQUIRE(win.maxCoeff() < t);
        REQUIRE(win[0] == static_cast<double>(m));
      }
    }
  }
}

TEST_CASE("multi-feature windows restricted to a target range", "[windows]") {
  MatrixXd f(20, 2);
  f.col(0) = VectorXd::LinSpaced(20, 0, 19);
  f.col(1) = -f.col(0);
  const auto w = make_windows(f, f.col(0), 4, 1, 10, 15);
  REQUIRE(w.size() == 5);
  REQUIRE(w.target_index.front() == 10);
  REQUIRE(w.data.windows.features == 2);
  REQUIRE(w.data.windows.window(0)(3, 0) == 9.0);
  REQUIRE(w.data.windows.window(0)(3, 1) == -9.0);
}

TEST_CASE("error metrics", "[metrics]") {
  const VectorXd a = vec({10, 20});
  REQUIRE(mape(a, a, 20.0) == 0.0);
  REQUIRE(mape(a, vec({12, 18}), 20.0) == Catch::Approx(10.0).epsilon(1e-14));
  REQUIRE(mape(3.5 * a, 3.5 * vec({12, 18}), 3.5 * 20.0) == Catch::Approx(10.0).epsilon(1e-14));
  REQUIRE_THROWS_AS(mape(a, a, 0.0), MetricError);

  const VectorXd zero = VectorXd::Zero(2);
  REQUIRE(rmse(zero, vec({3, -4})) == Catch::Approx(std::sqrt(12.5)).epsilon(1e-15));
  REQUIRE(mae(zero, vec({3, -4})) == 3.5);
  REQUIRE(rmse(a, a) == 0.0);
  REQUIRE(mae(a, a) == 0.0);
  REQUIRE(rmse(zero, vec({-2.5, -2.5})) == 2.5);
  REQUIRE(mae(zero, vec({-2.5, -2.5})) == 2.5);
  REQUIRE_THROWS_AS(rmse(VectorXd(), VectorXd()), MetricError);
  REQUIRE_THROWS_AS(mae(a, vec({1})), MetricError);
}

TEST_CASE("RMSE is never below MAE", "[metrics][property]") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g(0.0, 3.0);
  for (int rep = 0; rep < 200; ++rep) {
    VectorXd a(17), p(17);
    for (int i = 0; i < 17; ++i) {
      a[i] = g(rng);
      p[i] = g(rng);
    }
    REQUIRE(rmse(a, p) >= mae(a, p) * (1 - 1e-15));
  }
}

TEST_CASE("improvement and averages", "[metrics]") {
  REQUIRE(round_half_away(improvement(5.28, 1.83)) == 0.65);
  REQUIRE(round_half_away(improvement(4.89, 1.68)) == 0.66);
  REQUIRE(improvement(2.0, 2.0) == 0.0);
  REQUIRE_THROWS_AS(improvement(0.0, 1.0), MetricError);

  const double svr[] = {5.00, 6.33, 4.70, 1.63, 3.15};
  const double lstm[] = {4.89, 6.50, 4.91, 1.14, 2.90};
  REQUIRE(round_half_away(monthly_average(svr)) == 4.16);
  REQUIRE(round_half_away(monthly_average(lstm)) == 4.07);
  const double one[] = {2.5};
  REQUIRE(monthly_average(one) == 2.5);
  REQUIRE_THROWS_AS(monthly_average({}), MetricError);
}

TEST_CASE("round half away from zero", "[metrics]") {
  REQUIRE(round_half_away(0.125) == 0.13);
  REQUIRE(round_half_away(-0.125) == -0.13);
  REQUIRE(round_half_away(0.655) == 0.66);
  REQUIRE(round_half_away(0.6534) == 0.65);
  REQUIRE(round_half_away(2.5, 0) == 3.0);
  REQUIRE(round_half_away(-2.5, 0) == -3.0);
}

TEST_CASE("published tables are self-consistent", "[tables]") {
  const auto v = verify_tables(benchmark_tables());
  REQUIRE(v.improvements.size() == 105);
  REQUIRE(v.averages.size() == 24);
  for (const auto& c : v.improvements) {
    INFO(c.label << " published " << c.published << " computed " << c.computed);
    REQUIRE(c.ok);
  }
  for (const auto& c : v.averages) {
    INFO(c.label);
    REQUIRE(c.ok);
  }
  REQUIRE(v.passed());
  REQUIRE(v.improvement_averages.size() == 21);
}

TEST_CASE("a perturbed table entry is caught", "[tables]") {
  BenchmarkTables t = benchmark_tables();
  t.improvements[0][1][5] = 0.70;  // May RMSE vs LSTM
  auto v = verify_tables(t);
  REQUIRE_FALSE(v.passed());
  REQUIRE(v.failures() == 1);
  t = benchmark_tables();
  t.errors[2][0][7] += 0.5;  // Jul proposed MAPE feeds 7 improvements and one average
  v = verify_tables(t);
  REQUIRE(v.failures() == 8);
  t.errors.pop_back();
  REQUIRE_THROWS_AS(verify_tables(t), ConfigError);
}

TEST_CASE("components add back to the source", "[forecaster]") {
  const auto s = signal::synth(signal::two_tone_fixture_spec(400, 20.0));
  mvmd::MvmdConfig cfg;
  cfg.modes = 2;
  const auto ms = mvmd::decompose(s, cfg);
  const MatrixXd comps = channel_components(ms, s.values(), 1, true);
  REQUIRE(comps.cols() == 3);
  REQUIRE((comps.rowwise().sum() - s.values().col(1)).cwiseAbs().maxCoeff() < 1e-12);
  REQUIRE(channel_components(ms, s.values(), 1, false).cols() == 2);
}

TEST_CASE("perfect forecasts give zero validation error", "[bo_objective]") {
  ExperimentConfig cfg = tiny_config();
  const auto series = signal::synth(cfg.synth);
  const auto idx = split_indices(series.n_samples(), cfg.split, cfg.lags);
  const auto train = series.slice(0, static_cast<Eigen::Index>(idx.train_end));
  const auto e = bo_objective(train, idx.validation_begin, {3, 500.0}, cfg, perfect_trainer);
  REQUIRE(e.value < 1e-10);
}

TEST_CASE("objective is reproducible", "[bo_objective]") {
  ExperimentConfig cfg = tiny_config();
  const auto series = signal::synth(cfg.synth);
  const auto idx = split_indices(series.n_samples(), cfg.split, cfg.lags);
  const auto train = series.slice(0, static_cast<Eigen::Index>(idx.train_end));
  const auto a1 = bo_objective(train, idx.validation_begin, {2, 300.0}, cfg);
  const auto b1 = bo_objective(train, idx.validation_begin, {4, 3000.0}, cfg);
  const auto a2 = bo_objective(train, idx.validation_begin, {2, 300.0}, cfg);
  const auto b2 = bo_objective(train, idx.validation_begin, {4, 3000.0}, cfg);
  REQUIRE(a1.value == a2.value);
  REQUIRE(b1.value == b2.value);
  REQUIRE(std::isfinite(a1.value));
  REQUIRE(a1.value > 0.0);
}

TEST_CASE("non-converged decomposition is flagged, not dropped", "[bo_objective]") {
  ExperimentConfig cfg = tiny_config();
  cfg.mvmd.max_iter = 2;
  const auto series = signal::synth(cfg.synth);
  const auto idx = split_indices(series.n_samples(), cfg.split, cfg.lags);
  const auto e = bo_objective(series.slice(0, static_cast<Eigen::Index>(idx.train_end)), idx.validation_begin,
                              {3, 1000.0}, cfg, perfect_trainer);
  REQUIRE(e.flag == "nonconverged");
  REQUIRE(std::isfinite(e.value));
}

TEST_CASE("missing a tone costs validation accuracy", "[bo_objective]") {
  ExperimentConfig cfg;
  cfg.synth = signal::two_tone_fixture_spec(1200, 20.0);
  cfg.residual = false;
  cfg.train.hidden_size = 16;
  cfg.bo_epochs = 15;
  const auto series = signal::synth(cfg.synth);
  const auto idx = split_indices(series.n_samples(), cfg.split, cfg.lags);
  const auto train = series.slice(0, static_cast<Eigen::Index>(idx.train_end));
  const double k1 = bo_objective(train, idx.validation_begin, {1, 2000.0}, cfg).value;
  const double k2 = bo_objective(train, idx.validation_begin, {2, 2000.0}, cfg).value;
  INFO("K=1 " << k1 << " K=2 " << k2);
  REQUIRE(k1 > k2);
}

TEST_CASE("full training builds one model per channel and component", "[train_full]") {
  const auto s = signal::synth(signal::default_fixture_spec(1));
  const auto train = s.slice(0, 400);
  lstm::TrainConfig tc;
  tc.hidden_size = 3;
  tc.epochs = 3;
  mvmd::MvmdConfig mc;
  mc.max_iter = 50;
  const auto b = train_full(train, {5, 1000.0}, mc, 6, 1, {false, false}, tc, 9);
  REQUIRE(b.n_models() == 15);
  REQUIRE(b.mvmd.modes == 5);
  for (const auto& per_channel : b.loss_traces) {
    for (const auto& trace : per_channel) {
      REQUIRE(trace.size() == 3);
      for (double v : trace) REQUIRE(std::isfinite(v));
    }
  }
  REQUIRE(train_full(train, {5, 1000.0}, mc, 6, 1, {true, false}, tc, 9).n_models() == 18);

  const auto dir = scratch("bundle");
  save_bundle(b, dir);
  REQUIRE(std::filesystem::exists(dir / "bundle.json"));
  REQUIRE(std::filesystem::exists(dir / "model_ch3_c5.bin"));
  REQUIRE(std::filesystem::exists(dir / "loss_ch1_c1.csv"));
  REQUIRE(load_bundle(dir) == b);
  std::filesystem::remove_all(dir);
}

TEST_CASE("stub models forecast zero", "[forecast]") {
  ModelBundle b;
  b.params = {2, 1000.0};
  b.mvmd.modes = 2;
  b.mvmd.alpha = 1000.0;
  b.components = {false, false};
  b.channel_names = {"a", "b"};
  b.scales = {{0.0, 1.0}, {0.0, 4.0}};
  b.models.assign(2, std::vector<lstm::LstmParams>(2, lstm::LstmParams(3, 1)));
  b.loss_traces.assign(2, std::vector<std::vector<double>>(2));
  const auto s = signal::synth(signal::two_tone_fixture_spec(200, 20.0));
  const signal::MultichannelSeries history(MatrixXd(s.values().topLeftCorner(100, 2)));
  const auto f = forecast(b, history);
  REQUIRE(f.size() == 1);
  REQUIRE(f.target_index[0] == 100);
  REQUIRE(f.channels.isZero(0.0));
  REQUIRE(f.total[0] == 0.0);
}

TEST_CASE("single channel single mode forecast is the model output", "[forecast]") {
  const auto s = signal::synth(signal::two_tone_fixture_spec(300, 20.0));
  const signal::MultichannelSeries one(MatrixXd(s.values().col(0)));
  lstm::TrainConfig tc;
  tc.hidden_size = 4;
  tc.epochs = 2;
  mvmd::MvmdConfig mc;
  const auto b = train_full(one, {1, 2000.0}, mc, 6, 1, {false, false}, tc, 3);
  const auto f = forecast(b, one);

  const auto normalized = signal::apply_scales(one, b.scales);
  mvmd::MvmdConfig used = b.mvmd;
  const auto ms = mvmd::decompose(normalized, used);
  MatrixXd w = ms.modes[0].col(0).bottomRows(6);
  const double raw = lstm::forward(b.models[0][0], w).prediction;
  REQUIRE(f.channels(0, 0) == Catch::Approx(b.scales[0].denormalize(raw)).margin(1e-12));
}

TEST_CASE("aggregation equals the sum of model outputs", "[forecast]") {
  const auto s = signal::synth(signal::default_fixture_spec(2));
  const auto train = s.slice(0, 300);
  lstm::TrainConfig tc;
  tc.hidden_size = 3;
  tc.epochs = 2;
  mvmd::MvmdConfig mc;
  mc.max_iter = 40;
  const auto b = train_full(train, {3, 800.0}, mc, 6, 1, {true, false}, tc, 4);
  const auto normalized = signal::apply_scales(s.slice(0, 360), b.scales);
  const auto ms = mvmd::decompose(normalized, b.mvmd);
  const auto f = forecast_from_modes(b, ms, normalized.values(), 300, 360);
  REQUIRE(f.size() == 60);
  for (Eigen::Index j = 0; j < 3; ++j) {
    const MatrixXd comps = channel_components(ms, normalized.values(), j, true);
    for (std::size_t r = 0; r < f.size(); r += 7) {
      const auto t = static_cast<Eigen::Index>(f.target_index[r]);
      double sum = 0.0;
      for (Eigen::Index c = 0; c < comps.cols(); ++c) {
        const MatrixXd w = comps.col(c).segment(t - 6, 6);
        sum += lstm::forward(b.models[static_cast<std::size_t>(j)][static_cast<std::size_t>(c)], w).prediction;
      }
      const double expected = b.scales[static_cast<std::size_t>(j)].denormalize(sum);
      REQUIRE(std::abs(f.channels(static_cast<Eigen::Index>(r), j) - expected) < 1e-12);
    }
  }
  REQUIRE((f.total - f.channels.rowwise().sum()).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("forecast needs enough history", "[forecast]") {
  ModelBundle b;
  b.params = {1, 1000.0};
  b.mvmd.modes = 1;
  b.components = {false, false};
  b.channel_names = {"a"};
  b.scales = {{0.0, 1.0}};
  b.models = {{lstm::LstmParams(2, 1)}};
  b.loss_traces = {{{}}};
  const signal::MultichannelSeries shortest(MatrixXd::Constant(5, 1, 0.5));
  REQUIRE_THROWS_AS(forecast(b, shortest), SplitError);
}

TEST_CASE("parallel task execution keeps order and results", "[forecaster]") {
  std::vector<ImfTask> tasks;
  for (int k = 0; k < 5; ++k) {
    ImfTask t;
    t.label = "t" + std::to_string(k);
    t.fit = make_windows(VectorXd::LinSpaced(40, 0, 1) * (k + 1), 6).data;
    t.query = t.fit.windows;
    t.config.hidden_size = 3;
    t.config.epochs = 2;
    t.config.seed = static_cast<std::uint64_t>(k);
    tasks.push_back(std::move(t));
  }
  const auto serial = run_tasks(tasks, train_lstm_task, 1);
  const auto parallel = run_tasks(tasks, train_lstm_task, 3);
  for (std::size_t k = 0; k < tasks.size(); ++k) {
    REQUIRE(serial[k].params == parallel[k].params);
    REQUIRE(serial[k].predictions == parallel[k].predictions);
  }
  auto failing = [](const ImfTask& t) -> ImfResult {
    if (t.label == "t3") throw NumericError("boom");
    return perfect_trainer(t);
  };
  try {
    run_tasks(tasks, failing, 2);
    FAIL("expected failure");
  } catch (const Error& e) {
    REQUIRE(e.kind() == ErrorKind::numeric);
    REQUIRE(std::string(e.what()) == "t3: boom");
  }
}

TEST_CASE("config json round trip", "[config]") {
  ExperimentConfig c = tiny_config();
  c.protocol = LeakageProtocol::rolling;
  c.cross_imf = true;
  c.fixed_params = bayes::MvmdParams{4, 1234.5};
  const auto back = ExperimentConfig::from_json(c.to_json());
  REQUIRE(back.to_json() == c.to_json());
  REQUIRE(back.hash() == c.hash());
  ExperimentConfig other = c;
  other.seed += 1;
  REQUIRE(other.hash() != c.hash());
  other = c;
  other.jobs = 4;
  REQUIRE(other.hash() == c.hash());

  auto j = c.to_json();
  j["train"]["epochz"] = 3;
  REQUIRE_THROWS_AS(ExperimentConfig::from_json(j), ConfigError);
  j = c.to_json();
  j["protocol"] = "lookahead";
  REQUIRE_THROWS_AS(ExperimentConfig::from_json(j), ConfigError);
  j = c.to_json();
  j["train"]["epochs"] = 0;
  REQUIRE_THROWS_AS(ExperimentConfig::from_json(j), ConfigError);
  REQUIRE(ExperimentConfig::from_json(nlohmann::json::object()).to_json() == ExperimentConfig{}.to_json());
}

TEST_CASE("experiment report is deterministic and self-consistent", "[experiment]") {
  const ExperimentConfig cfg = tiny_config();
  const auto a = run_experiment(cfg);
  const auto b = run_experiment(cfg);
  REQUIRE(a.report.dump() == b.report.dump());
  REQUIRE(a.history->trials.size() == 3);

  const auto& m = a.report["metrics"];
  const auto& imp = a.report["improvement_vs_baseline"];
  for (const std::string name : {"wind", "solar", "wave", "total"}) {
    for (const std::string k : {"mape", "rmse", "mae"}) {
      const double p = m["proposed"][name][k].get<double>();
      const double q = m["baseline"][name][k].get<double>();
      REQUIRE(p >= 0.0);
      REQUIRE(imp[name][k].get<double>() == improvement(q, p));
    }
    REQUIRE(m["proposed"][name]["rmse"].get<double>() >= m["proposed"][name]["mae"].get<double>());
    REQUIRE(m["baseline"][name]["rmse"].get<double>() >= m["baseline"][name]["mae"].get<double>());
  }
  REQUIRE((a.proposed.total - a.proposed.channels.rowwise().sum()).cwiseAbs().maxCoeff() < 1e-9);
  REQUIRE(a.proposed.size() == 100);

  ExperimentConfig par = cfg;
  par.jobs = 3;
  REQUIRE(run_experiment(par).report.dump() == a.report.dump());

  const auto dir = scratch("run");
  write_experiment(a, dir);
  for (const char* f : {"report.json", "timings.json", "forecast_vs_actual.csv", "trials.csv", "best_params.json",
                        "models/bundle.json"}) {
    INFO(f);
    REQUIRE(std::filesystem::exists(dir / f));
  }
  std::ifstream csv(dir / "forecast_vs_actual.csv");
  std::string header;
  std::getline(csv, header);
  REQUIRE(header == "t,actual_wind,pred_wind,actual_solar,pred_solar,actual_wave,pred_wave,actual_total,pred_total,"
                    "baseline_total");
  std::filesystem::remove_all(dir);
}

TEST_CASE("alternative protocol and aggregation run", "[experiment]") {
  ExperimentConfig cfg = tiny_config();
  cfg.synth.n_samples = 300;
  cfg.fixed_params = bayes::MvmdParams{2, 800.0};
  cfg.protocol = LeakageProtocol::rolling;
  const auto rolled = run_experiment(cfg);
  REQUIRE(rolled.proposed.size() == 60);
  REQUIRE_FALSE(rolled.history.has_value());
  REQUIRE(rolled.report["protocol"] == "rolling");

  cfg.protocol = LeakageProtocol::split;
  cfg.aggregation = Aggregation::direct;
  cfg.cross_imf = true;
  const auto direct = run_experiment(cfg);
  REQUIRE(direct.total_bundle.has_value());
  REQUIRE(direct.total_bundle->n_channels() == 1);
  REQUIRE(direct.bundle.models[0][0].input_size() == 3);
}

TEST_CASE("phase errors name the phase", "[experiment]") {
  auto broken = [](const ImfTask&) -> ImfResult { throw NumericError("diverged"); };
  try {
    run_experiment(tiny_config(), broken);
    FAIL("expected failure");
  } catch (const PhaseError& e) {
    REQUIRE(e.phase() == "tune");
    REQUIRE(e.kind() == ErrorKind::numeric);
  }
  ExperimentConfig cfg = tiny_config();
  cfg.fixed_params = bayes::MvmdParams{2, 800.0};
  try {
    run_experiment(cfg, broken);
    FAIL("expected failure");
  } catch (const PhaseError& e) {
    REQUIRE(e.phase() == "train");
    REQUIRE(std::string(e.what()).find("wind/imf1: diverged") != std::string::npos);
  }
  cfg.synth.n_samples = 20;
  try {
    run_experiment(cfg);
    FAIL("expected failure");
  } catch (const PhaseError& e) {
    REQUIRE(e.phase() == "preprocess");
    REQUIRE(e.kind() == ErrorKind::data);
  }
}
