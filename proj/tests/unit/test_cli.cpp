#include <catch_amalgamated.hpp>

#include "mvmdlstm/cli/cli.hpp"
#include "mvmdlstm/pipeline/metrics.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;
using mvmdlstm::cli::run_cli;
using nlohmann::json;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("mvmdlstm_cli_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

// Small enough for a unit test: 500 samples, tiny models.
std::vector<std::string> small_run(const std::string& cmd, const fs::path& out) {
  return {cmd,        "--out",    out.string(), "--n",     "500",   "--hidden", "4",      "--epochs",
          "2",        "--bo-epochs", "1",       "--budget", "3",    "--n-init", "2",      "--k-min",
          "2",        "--k-max",  "4",          "--max-iter", "60"};
}

}  // namespace

TEST_CASE("help enumerates every flag", "[cli]") {
  const auto r = cli({"run", "--help"});
  REQUIRE(r.code == 0);
  for (const char* flag : {"--config", "--out", "--seed", "--verbose", "--csv", "--channels", "--fixture", "--n",
                           "--snr", "--tau", "--tol", "--max-iter", "--omega-init", "--lags", "--horizon",
                           "--train-fraction", "--k-min", "--k-max", "--alpha-min", "--alpha-max", "--budget",
                           "--n-init", "--bo-epochs", "--hidden", "--batch", "--epochs", "--lr", "--jobs",
                           "--residual", "--cross-imf", "--K", "--alpha", "--protocol", "--aggregation"}) {
    INFO(flag);
    REQUIRE(r.out.find(flag) != std::string::npos);
  }
  const auto top = cli({"--help"});
  REQUIRE(top.code == 0);
  for (const char* sub : {"synth", "decompose", "tune", "run", "verify-tables"}) {
    REQUIRE(top.out.find(sub) != std::string::npos);
  }
}

TEST_CASE("bad invocations are config errors", "[cli]") {
  REQUIRE(cli({}).code == 2);
  REQUIRE(cli({"synth", "--bogus"}).code == 2);
  REQUIRE(cli({"fly"}).code == 2);
  REQUIRE(cli({"synth", "--fixture", "three-tone"}).code == 2);
  REQUIRE(cli({"decompose", "--K", "0", "--out", scratch("k0").string()}).code == 2);
  REQUIRE(cli({"decompose"}).code == 2);
  REQUIRE(cli({"run", "--alpha", "500"}).code == 2);
}

TEST_CASE("synth writes the fixture and honors overrides", "[cli]") {
  const auto a = scratch("synth_a"), b = scratch("synth_b"), c = scratch("synth_c");
  auto r = cli({"synth", "--out", a.string()});
  REQUIRE(r.code == 0);
  REQUIRE(r.out.find("N=4000 C=3 dt=300") != std::string::npos);
  const auto rows = read_csv(a / "synth.csv");
  REQUIRE(rows.size() == 4001);
  REQUIRE(rows[1].size() == 4);
  REQUIRE(cli({"synth", "--out", b.string()}).code == 0);
  REQUIRE(slurp(a / "synth.csv") == slurp(b / "synth.csv"));

  REQUIRE(cli({"synth", "--out", c.string(), "--n", "100", "--seed", "7"}).code == 0);
  const auto cfg = json::parse(slurp(c / "config.json"));
  REQUIRE(cfg["data"]["synth"]["n_samples"] == 100);
  REQUIRE(cfg["data"]["synth"]["seed"] == 7);
  REQUIRE(cfg["seed"] == 7);
  REQUIRE(read_csv(c / "synth.csv").size() == 101);
  for (const auto& d : {a, b, c}) fs::remove_all(d);
}

TEST_CASE("unwritable output is a data error", "[cli]") {
  const auto f = scratch("blocker");
  std::ofstream(f) << "x";
  const auto r = cli({"synth", "--out", (f / "sub").string()});
  REQUIRE(r.code == 3);
  REQUIRE_FALSE(r.err.empty());
  fs::remove(f);
}

TEST_CASE("config file values yield to flags", "[cli]") {
  const auto dir = scratch("cfg");
  fs::create_directories(dir);
  std::ofstream(dir / "c.json") << R"({"data": {"synth": {"n_samples": 300}}, "seed": 9, "output": ")"
                                << (dir / "from_file").string() << R"("})";
  REQUIRE(cli({"synth", "--config", (dir / "c.json").string()}).code == 0);
  auto cfg = json::parse(slurp(dir / "from_file" / "config.json"));
  REQUIRE(cfg["data"]["synth"]["n_samples"] == 300);
  REQUIRE(cfg["seed"] == 9);
  REQUIRE(cli({"synth", "--config", (dir / "c.json").string(), "--n", "50", "--out", (dir / "flag").string()})
              .code == 0);
  cfg = json::parse(slurp(dir / "flag" / "config.json"));
  REQUIRE(cfg["data"]["synth"]["n_samples"] == 50);
  REQUIRE(cfg["seed"] == 9);

  std::ofstream(dir / "bad.json") << R"({"seeed": 1})";
  REQUIRE(cli({"synth", "--config", (dir / "bad.json").string(), "--out", (dir / "x").string()}).code == 2);
  std::ofstream(dir / "broken.json") << "{";
  REQUIRE(cli({"synth", "--config", (dir / "broken.json").string(), "--out", (dir / "x").string()}).code == 2);
  fs::remove_all(dir);
}

TEST_CASE("decompose recovers the two tones", "[cli]") {
  const auto dir = scratch("decompose");
  const auto r = cli({"decompose", "--fixture", "two-tone", "--K", "2", "--alpha", "2000", "--out", dir.string()});
  REQUIRE(r.code == 0);
  const auto rows = read_csv(dir / "omega.csv");
  REQUIRE(rows.size() == 3);
  const double w1 = std::stod(rows[1][1]), w2 = std::stod(rows[2][1]);
  CHECK(std::abs(std::min(w1, w2) - 0.05) < 1e-3);
  CHECK(std::abs(std::max(w1, w2) - 0.20) < 1e-3);
  REQUIRE(fs::exists(dir / "mode_k2_ch3.csv"));

  // The reconstruction constraint is only enforced with dual ascent on.
  const auto tight = scratch("decompose_tau");
  REQUIRE(cli({"decompose", "--fixture", "two-tone", "--K", "2", "--tau", "1", "--tol", "1e-11", "--max-iter", "5000",
               "--out", tight.string()})
              .code == 0);
  const auto diag = json::parse(slurp(tight / "diagnostics.json"));
  REQUIRE(diag["reconstruction_error"].size() == 3);
  for (const auto& e : diag["reconstruction_error"]) REQUIRE(e.get<double>() < 1e-2);
  fs::remove_all(dir);
  fs::remove_all(tight);
}

TEST_CASE("tune writes a consistent, reproducible trial log", "[cli]") {
  const auto a = scratch("tune_a"), b = scratch("tune_b");
  auto args = small_run("tune", a);
  args[std::find(args.begin(), args.end(), "--budget") - args.begin() + 1] = "8";
  REQUIRE(cli(args).code == 0);
  args[2] = b.string();
  REQUIRE(cli(args).code == 0);

  const auto rows = read_csv(a / "trials.csv");
  REQUIRE(rows.size() == 9);
  REQUIRE(rows[0] == std::vector<std::string>{"trial", "K", "alpha", "objective", "flag", "seconds"});
  double col_min = 1e300;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i][4] != "failed") col_min = std::min(col_min, std::stod(rows[i][3]));
  }
  const auto best = json::parse(slurp(a / "best_params.json"));
  REQUIRE(best["objective"].get<double>() == col_min);

  const auto other = read_csv(b / "trials.csv");
  REQUIRE(other.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    REQUIRE(std::vector<std::string>(rows[i].begin(), rows[i].begin() + 5) ==
            std::vector<std::string>(other[i].begin(), other[i].begin() + 5));
  }
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("run reports consistent metrics and replays from its config", "[cli]") {
  const auto a = scratch("run_a"), b = scratch("run_b");
  const auto r = cli(small_run("run", a));
  REQUIRE(r.code == 0);
  REQUIRE(r.out.find("total") != std::string::npos);
  const auto report = json::parse(slurp(a / "report.json"));
  for (const auto& [name, imp] : report["improvement_vs_baseline"].items()) {
    for (const char* k : {"mape", "rmse", "mae"}) {
      const double base = report["metrics"]["baseline"][name][k].get<double>();
      const double prop = report["metrics"]["proposed"][name][k].get<double>();
      REQUIRE(imp[k].get<double>() == mvmdlstm::pipeline::improvement(base, prop));
    }
  }
  REQUIRE(fs::exists(a / "forecast_vs_actual.csv"));
  REQUIRE(fs::exists(a / "timings.json"));

  REQUIRE(cli({"run", "--config", (a / "config.json").string(), "--out", b.string()}).code == 0);
  REQUIRE(slurp(a / "report.json") == slurp(b / "report.json"));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("pipeline failures exit nonzero with the phase", "[cli]") {
  const auto dir = scratch("fail");
  fs::create_directories(dir);
  std::ofstream(dir / "gap.csv") << "timestamp,a,b,c\n2021-05-01T00:00:00Z,1,2,3\n2021-05-01T00:05:00Z,1,,3\n";
  auto r = cli({"run", "--csv", (dir / "gap.csv").string(), "--out", (dir / "o").string()});
  REQUIRE(r.code == 3);
  REQUIRE(r.err.find("[preprocess]") != std::string::npos);

  r = cli({"run", "--n", "20", "--K", "2", "--out", (dir / "short").string()});
  REQUIRE(r.code == 3);
  REQUIRE(r.err.find("[preprocess]") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("verify-tables passes on the embedded tables", "[cli]") {
  const auto r = cli({"verify-tables"});
  REQUIRE(r.code == 0);
  REQUIRE(r.out.find("improvement entries: 105/105 reproduced") != std::string::npos);
  REQUIRE(r.out.find("average row entries: 24/24 reproduced") != std::string::npos);
  REQUIRE(r.out.find("MISMATCH") == std::string::npos);
  const auto all = cli({"verify-tables", "--verbose"});
  REQUIRE(all.out.find("SVR") != std::string::npos);
  REQUIRE(all.out.find("4.16") != std::string::npos);
}
