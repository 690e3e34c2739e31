#include "mvmdlstm/cli/cli.hpp"

#include "mvmdlstm/error.hpp"
#include "mvmdlstm/mvmd/mvmd.hpp"
#include "mvmdlstm/pipeline/experiment.hpp"
#include "mvmdlstm/pipeline/tables.hpp"
#include "mvmdlstm/signal/csv_io.hpp"
#include "mvmdlstm/signal/synth.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>

namespace mvmdlstm::cli {

namespace fs = std::filesystem;
using nlohmann::json;
using pipeline::ExperimentConfig;

namespace {

// Flag values land here; only flags given on the command line are applied
// on top of the config file.
struct Flags {
  std::string config_file;
  std::string out_dir = "out";
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
  bool verbose = false;

  std::string csv;
  std::size_t channels = 3;
  std::string fixture;
  std::size_t n = 0;
  double snr_db = 20.0;

  std::size_t lags = 6;
  std::size_t horizon = 1;
  double train_fraction = 0.8;

  int k = 0;
  double alpha = 2000.0;
  double tau = 0.0;
  double tol = 1e-7;
  int max_iter = 500;
  std::string omega_init;

  int k_min = 3, k_max = 10;
  double alpha_min = 1e2, alpha_max = 1e4;
  std::size_t budget = 25, n_init = 5;
  int bo_epochs = 15;

  int hidden = 32, batch = 64, epochs = 100;
  double lr = 1e-3;
  std::string protocol, aggregation;
  bool residual = true;
  bool cross_imf = false;
};

struct Registered {
  CLI::App* app = nullptr;
  bool data = false, split = false, mvmd = false, search = false, train = false;
};

bool given(const CLI::App* app, const std::string& name) {
  try {
    return app->get_option(name)->count() > 0;
  } catch (const CLI::OptionNotFound&) {
    return false;
  }
}

void add_common(CLI::App* app, Flags& f) {
  app->add_option("-c,--config", f.config_file, "JSON config file; flags override its values")
      ->check(CLI::ExistingFile);
  app->add_option("-o,--out", f.out_dir, "Output directory")->capture_default_str();
  app->add_option("--seed", f.seed, "Seed for data synthesis, decomposition init, tuning and training");
  app->add_flag("-v,--verbose", f.verbose, "Report progress on stderr");
}

void add_data(Registered& r, Flags& f) {
  r.data = true;
  r.app->add_option("--csv", f.csv, "Read timestamp,<ch>... CSV instead of synthesizing")->check(CLI::ExistingFile);
  r.app->add_option("--channels", f.channels, "Value columns to read from the CSV")->check(CLI::PositiveNumber);
  r.app->add_option("--fixture", f.fixture, "Synthetic dataset")->check(CLI::IsMember({"default", "two-tone"}));
  r.app->add_option("--n", f.n, "Synthetic sample count")->check(CLI::PositiveNumber);
  r.app->add_option("--snr", f.snr_db, "Two-tone fixture SNR in dB");
}

void add_split(Registered& r, Flags& f) {
  r.split = true;
  r.app->add_option("--lags", f.lags, "Window length")->check(CLI::PositiveNumber);
  r.app->add_option("--horizon", f.horizon, "Steps ahead")->check(CLI::PositiveNumber);
  r.app->add_option("--train-fraction", f.train_fraction, "Chronological train share");
}

void add_mvmd(Registered& r, Flags& f) {
  r.mvmd = true;
  r.app->add_option("--tau", f.tau, "Dual ascent step");
  r.app->add_option("--tol", f.tol, "Convergence tolerance");
  r.app->add_option("--max-iter", f.max_iter, "ADMM iteration cap");
  r.app->add_option("--omega-init", f.omega_init, "Center frequency initialization")
      ->check(CLI::IsMember({"uniform-grid", "zeros", "random"}));
}

void add_search(Registered& r, Flags& f) {
  r.search = true;
  r.app->add_option("--k-min", f.k_min, "Smallest mode count searched");
  r.app->add_option("--k-max", f.k_max, "Largest mode count searched");
  r.app->add_option("--alpha-min", f.alpha_min, "Lower bound of the penalty factor");
  r.app->add_option("--alpha-max", f.alpha_max, "Upper bound of the penalty factor");
  r.app->add_option("--budget", f.budget, "Objective evaluations");
  r.app->add_option("--n-init", f.n_init, "Quasi-random evaluations before the surrogate");
  r.app->add_option("--bo-epochs", f.bo_epochs, "Training epochs inside the objective");
}

void add_train(Registered& r, Flags& f) {
  r.train = true;
  r.app->add_option("--hidden", f.hidden, "LSTM hidden units");
  r.app->add_option("--batch", f.batch, "Mini-batch size");
  r.app->add_option("--epochs", f.epochs, "Training epochs of the final models");
  r.app->add_option("--lr", f.lr, "Adam learning rate");
  r.app->add_option("--jobs", f.jobs, "Concurrent model trainings")->check(CLI::PositiveNumber);
  r.app->add_option("--residual", f.residual, "Model x minus the sum of modes as one more component (true/false)");
  r.app->add_flag("--cross-imf", f.cross_imf, "Feed every component of a channel to each model");
}

ExperimentConfig load_config(const Flags& f, json* extra) {
  json file = json::object();
  if (!f.config_file.empty()) {
    std::ifstream in(f.config_file);
    try {
      file = json::parse(in);
    } catch (const json::exception& e) {
      throw ConfigError("config file " + f.config_file + ": " + e.what());
    }
    if (!file.is_object()) throw ConfigError("config file " + f.config_file + ": expected a JSON object");
  }
  if (file.contains("output")) {
    if (!file["output"].is_string()) throw ConfigError("output: expected a string");
    (*extra)["output"] = file["output"];
    file.erase("output");
  }
  return ExperimentConfig::from_json(file);
}

ExperimentConfig effective_config(const Registered& r, const Flags& f, fs::path& out_dir) {
  json extra = json::object();
  ExperimentConfig c = load_config(f, &extra);
  const CLI::App* a = r.app;
  out_dir = given(a, "--out") || !extra.contains("output") ? fs::path(f.out_dir)
                                                            : fs::path(extra["output"].get<std::string>());

  if (r.data) {
    if (given(a, "--csv")) c.csv = fs::path(f.csv);
    if (given(a, "--channels")) c.csv_channels = f.channels;
    if (given(a, "--fixture")) {
      c.csv.reset();
      const std::size_t n = given(a, "--n") ? f.n : c.synth.n_samples;
      c.synth = f.fixture == "two-tone" ? signal::two_tone_fixture_spec(n, f.snr_db) : signal::default_fixture_spec();
      c.synth.n_samples = n;
    } else if (given(a, "--snr")) {
      throw ConfigError("--snr applies to --fixture two-tone");
    }
    if (given(a, "--n")) c.synth.n_samples = f.n;
  }
  if (given(a, "--seed")) {
    c.seed = f.seed;
    c.synth.seed = f.seed;
    c.mvmd.seed = f.seed;
  }
  if (r.split) {
    if (given(a, "--lags")) c.lags = f.lags;
    if (given(a, "--horizon")) c.horizon = f.horizon;
    if (given(a, "--train-fraction")) c.split.train_fraction = f.train_fraction;
  }
  if (r.mvmd) {
    if (given(a, "--tau")) c.mvmd.tau = f.tau;
    if (given(a, "--tol")) c.mvmd.tol = f.tol;
    if (given(a, "--max-iter")) c.mvmd.max_iter = f.max_iter;
    if (given(a, "--omega-init")) c.mvmd.omega_init = mvmd::omega_init_from_string(f.omega_init);
  }
  if (r.search) {
    if (given(a, "--k-min")) c.search.k_min = f.k_min;
    if (given(a, "--k-max")) c.search.k_max = f.k_max;
    if (given(a, "--alpha-min")) c.search.alpha_min = f.alpha_min;
    if (given(a, "--alpha-max")) c.search.alpha_max = f.alpha_max;
    if (given(a, "--budget")) c.bo_budget = f.budget;
    if (given(a, "--n-init")) c.bo_init = f.n_init;
    if (given(a, "--bo-epochs")) c.bo_epochs = f.bo_epochs;
  }
  if (r.train) {
    if (given(a, "--hidden")) c.train.hidden_size = f.hidden;
    if (given(a, "--batch")) c.train.batch_size = f.batch;
    if (given(a, "--epochs")) c.train.epochs = f.epochs;
    if (given(a, "--lr")) c.train.learning_rate = f.lr;
    if (given(a, "--jobs")) c.jobs = f.jobs;
    if (given(a, "--residual")) c.residual = f.residual;
    if (given(a, "--cross-imf")) c.cross_imf = f.cross_imf;
  }
  if (given(a, "--protocol")) c.protocol = pipeline::protocol_from_string(f.protocol);
  if (given(a, "--aggregation")) c.aggregation = pipeline::aggregation_from_string(f.aggregation);
  if (given(a, "--K")) {
    if (given(a, "--k-min") || given(a, "--k-max")) throw ConfigError("--K fixes the parameters; drop the search bounds");
    c.fixed_params = bayes::MvmdParams{f.k, given(a, "--alpha") ? f.alpha : 2000.0};
  } else if (given(a, "--alpha") && a->get_name() == "run") {
    throw ConfigError("--alpha needs --K");
  }
  c.validate();
  return c;
}

void prepare_output(const fs::path& dir, const ExperimentConfig& c) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create output directory " + dir.string() + ": " + ec.message());
  json j = c.to_json();
  j["jobs"] = c.jobs;
  j["output"] = dir.string();
  std::ofstream f(dir / "config.json");
  f << j.dump(2) << "\n";
  if (!f) throw DataError("cannot write " + (dir / "config.json").string());
}

pipeline::ProgressFn progress_to(std::ostream& err, bool verbose) {
  if (!verbose) return {};
  return [&err](const std::string& m) { err << m << "\n"; };
}

int cmd_synth(const Registered& r, const Flags& f, std::ostream& out) {
  fs::path dir;
  ExperimentConfig c = effective_config(r, f, dir);
  if (c.csv) throw ConfigError("synth writes a synthetic dataset; --csv does not apply");
  const auto series = signal::synth(c.synth);
  prepare_output(dir, c);
  signal::write_csv(series, dir / "synth.csv");
  out << "N=" << series.n_samples() << " C=" << series.n_channels() << " dt=" << series.dt() << "\n"
      << "wrote " << (dir / "synth.csv").string() << "\n";
  return 0;
}

int cmd_decompose(const Registered& r, const Flags& f, std::ostream& out) {
  fs::path dir;
  ExperimentConfig c = effective_config(r, f, dir);
  mvmd::MvmdConfig m = c.mvmd;
  m.modes = f.k;
  m.alpha = f.alpha;
  m.validate();
  const auto series = pipeline::load_experiment_data(c);
  prepare_output(dir, c);
  const auto ms = mvmd::decompose(series, m);
  mvmd::write_modeset(ms, dir);
  char buf[96];
  for (std::size_t k = 0; k < ms.omega.size(); ++k) {
    std::snprintf(buf, sizeof buf, "omega[%zu]=%.6f\n", k + 1, ms.omega[k]);
    out << buf;
  }
  const double worst = *std::max_element(ms.reconstruction_error.begin(), ms.reconstruction_error.end());
  std::snprintf(buf, sizeof buf, "iterations=%d converged=%s max_reconstruction_error=%.3e\n", ms.iterations_run,
                ms.converged ? "true" : "false", worst);
  out << buf;
  return 0;
}

int cmd_tune(const Registered& r, const Flags& f, std::ostream& out, std::ostream& err) {
  fs::path dir;
  ExperimentConfig c = effective_config(r, f, dir);
  const auto series = pipeline::load_experiment_data(c);
  const auto split = pipeline::split_indices(series.n_samples(), c.split, c.lags);
  prepare_output(dir, c);
  const auto history = pipeline::tune_parameters(series, split, c, pipeline::train_lstm_task,
                                                 progress_to(err, f.verbose));
  bayes::write_trials_csv(history, dir / "trials.csv");
  bayes::write_best_params(history, dir / "best_params.json");
  const auto& best = history.best();
  char buf[128];
  std::snprintf(buf, sizeof buf, "best K=%d alpha=%.6g validation_mape=%.6g\n", best.params.modes,
                best.params.alpha, best.objective);
  out << buf;
  return 0;
}

int cmd_run(const Registered& r, const Flags& f, std::ostream& out, std::ostream& err) {
  fs::path dir;
  ExperimentConfig c = effective_config(r, f, dir);
  prepare_output(dir, c);
  const auto result = pipeline::run_experiment(c, pipeline::train_lstm_task, progress_to(err, f.verbose));
  pipeline::write_experiment(result, dir);
  const auto& m = result.report["metrics"];
  char buf[160];
  std::snprintf(buf, sizeof buf, "K=%d alpha=%.6g\n", result.params.modes, result.params.alpha);
  out << buf;
  out << "series     method     MAPE      RMSE      MAE\n";
  std::vector<std::string> names = result.channel_names;
  names.push_back("total");
  for (const auto& name : names) {
    for (const char* method : {"proposed", "baseline"}) {
      const auto& e = m[method][name];
      std::snprintf(buf, sizeof buf, "%-10s %-10s %-9.4f %-9.4f %.4f\n", name.c_str(), method,
                    e["mape"].get<double>(), e["rmse"].get<double>(), e["mae"].get<double>());
      out << buf;
    }
  }
  out << "wrote " << (dir / "report.json").string() << "\n";
  return 0;
}

int cmd_verify_tables(const Flags& f, std::ostream& out) {
  const auto v = pipeline::verify_tables(pipeline::benchmark_tables());
  std::size_t bad_imp = 0, bad_avg = 0;
  char buf[160];
  auto list = [&](const std::vector<pipeline::TableCheck>& checks, std::size_t& bad) {
    for (const auto& c : checks) {
      if (!c.ok) ++bad;
      if (!c.ok || f.verbose) {
        std::snprintf(buf, sizeof buf, "%-8s %-36s published %6.2f computed %6.2f\n", c.ok ? "ok" : "MISMATCH",
                      c.label.c_str(), c.published, c.computed);
        out << buf;
      }
    }
  };
  list(v.improvements, bad_imp);
  list(v.averages, bad_avg);
  std::snprintf(buf, sizeof buf, "improvement entries: %zu/%zu reproduced\naverage row entries: %zu/%zu reproduced\n",
                v.improvements.size() - bad_imp, v.improvements.size(), v.averages.size() - bad_avg,
                v.averages.size());
  out << buf;
  if (f.verbose) {
    std::size_t bad = 0;
    out << "average improvement row (not checked):\n";
    list(v.improvement_averages, bad);
  }
  if (!v.passed()) throw FixtureMismatch(std::to_string(v.failures()) + " table entries not reproduced");
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app("MVMD-LSTM forecasting of multichannel renewable power", "mvmdlstm");
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Help for every subcommand");

  Flags f;
  Registered synth{app.add_subcommand("synth", "Write a synthetic dataset")};
  Registered decompose{app.add_subcommand("decompose", "Decompose a dataset into K modes")};
  Registered tune{app.add_subcommand("tune", "Bayesian optimization of (K, alpha)")};
  Registered run{app.add_subcommand("run", "Tune, train, forecast the test part and report")};
  CLI::App* verify = app.add_subcommand("verify-tables", "Recompute the published benchmark tables");

  for (Registered* r : {&synth, &decompose, &tune, &run}) add_common(r->app, f);
  add_data(synth, f);
  for (Registered* r : {&decompose, &tune, &run}) {
    add_data(*r, f);
    add_mvmd(*r, f);
  }
  decompose.app->add_option("--K", f.k, "Number of modes")->required();
  decompose.app->add_option("--alpha", f.alpha, "Bandwidth penalty")->capture_default_str();
  for (Registered* r : {&tune, &run}) {
    add_split(*r, f);
    add_search(*r, f);
    add_train(*r, f);
  }
  run.app->add_option("--K", f.k, "Skip tuning and use this mode count");
  run.app->add_option("--alpha", f.alpha, "Penalty used with --K");
  run.app->add_option("--protocol", f.protocol, "Test-set decomposition")
      ->check(CLI::IsMember({"split", "rolling"}));
  run.app->add_option("--aggregation", f.aggregation, "How the total is forecast")
      ->check(CLI::IsMember({"per-source", "direct"}));
  verify->add_flag("-v,--verbose", f.verbose, "List every entry, not only mismatches");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    if (!app.get_subcommands().empty()) err << "run with " << app.get_subcommands().front()->get_name() << " --help\n";
    return static_cast<int>(ErrorKind::config);
  }

  try {
    if (synth.app->parsed()) return cmd_synth(synth, f, out);
    if (decompose.app->parsed()) return cmd_decompose(decompose, f, out);
    if (tune.app->parsed()) return cmd_tune(tune, f, out, err);
    if (run.app->parsed()) return cmd_run(run, f, out, err);
    return cmd_verify_tables(f, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return static_cast<int>(ErrorKind::data);
  }
}

}  // namespace mvmdlstm::cli
