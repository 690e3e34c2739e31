#include "mvmdlstm/bayes/bayes_opt.hpp"

#include "mvmdlstm/error.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>

namespace mvmdlstm::bayes {

void SearchSpace::validate() const {
  if (k_min < 1) throw ConfigError("search space: K_min must be >= 1");
  if (k_max < k_min) throw ConfigError("search space: K_max < K_min");
  if (!(alpha_min > 0.0) || !std::isfinite(alpha_max)) {
    throw ConfigError("search space: alpha bounds must be positive and finite");
  }
  if (alpha_max < alpha_min) throw ConfigError("search space: alpha_max < alpha_min");
}

Eigen::Vector2d SearchSpace::to_unit(const MvmdParams& params) const {
  Eigen::Vector2d u;
  u[0] = k_max > k_min ? static_cast<double>(params.modes - k_min) / static_cast<double>(k_max - k_min) : 0.5;
  const double lo = std::log10(alpha_min);
  const double hi = std::log10(alpha_max);
  u[1] = hi > lo ? (std::log10(params.alpha) - lo) / (hi - lo) : 0.5;
  return u;
}

MvmdParams SearchSpace::from_unit(const Eigen::Ref<const Eigen::Vector2d>& unit) const {
  MvmdParams p;
  const double k = static_cast<double>(k_min) + std::clamp(unit[0], 0.0, 1.0) * (k_max - k_min);
  p.modes = std::clamp(static_cast<int>(std::lround(k)), k_min, k_max);
  const double lo = std::log10(alpha_min);
  const double hi = std::log10(alpha_max);
  p.alpha = hi > lo ? std::pow(10.0, lo + std::clamp(unit[1], 0.0, 1.0) * (hi - lo)) : alpha_min;
  return p;
}

bool SearchSpace::contains(const MvmdParams& params) const {
  const double eps = 1e-9 * alpha_max;
  return params.modes >= k_min && params.modes <= k_max && params.alpha >= alpha_min - eps &&
         params.alpha <= alpha_max + eps;
}

void TrialHistory::add(Trial trial) {
  trials.push_back(std::move(trial));
  const Trial& t = trials.back();
  if (t.failed() || !std::isfinite(t.objective)) return;
  if (!incumbent || t.objective < trials[*incumbent].objective) incumbent = trials.size() - 1;
}

const Trial& TrialHistory::best() const {
  if (!incumbent) throw NumericError("no successful trial in history");
  return trials[*incumbent];
}

bool TrialHistory::contains(const MvmdParams& params, const SearchSpace& space) const {
  const double lo = std::log10(space.alpha_min);
  const double hi = std::log10(space.alpha_max);
  const double tol = 1e-9 * std::max(1.0, hi - lo);
  return std::any_of(trials.begin(), trials.end(), [&](const Trial& t) {
    return t.params.modes == params.modes &&
           std::abs(std::log10(t.params.alpha) - std::log10(params.alpha)) <= tol;
  });
}

namespace {

double radical_inverse(std::uint64_t index, std::uint64_t base) {
  double inv = 1.0 / static_cast<double>(base);
  double f = inv;
  double out = 0.0;
  while (index > 0) {
    out += f * static_cast<double>(index % base);
    index /= base;
    f *= inv;
  }
  return out;
}

constexpr std::uint64_t kDesignStream = 0x9e3779b97f4a7c15ULL;
constexpr std::size_t kMaxDesignProbe = 1 << 14;

MvmdParams next_design_point(const SearchSpace& space, const TrialHistory& history, std::uint64_t seed) {
  const Eigen::MatrixXd pts = quasi_random_points(kMaxDesignProbe, seed ^ kDesignStream);
  for (Eigen::Index i = static_cast<Eigen::Index>(history.trials.size()); i < pts.rows(); ++i) {
    const MvmdParams p = space.from_unit(pts.row(i).transpose());
    if (!history.contains(p, space)) return p;
  }
  throw NumericError("search space exhausted: every design point is already in the history");
}

}  // namespace

Eigen::MatrixXd quasi_random_points(std::size_t count, std::uint64_t seed, std::size_t skip) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double shift0 = u(rng);
  const double shift1 = u(rng);
  Eigen::MatrixXd pts(static_cast<Eigen::Index>(count), 2);
  for (std::size_t i = 0; i < count; ++i) {
    const auto idx = static_cast<std::uint64_t>(i + skip + 1);
    const double a = radical_inverse(idx, 2) + shift0;
    const double b = radical_inverse(idx, 3) + shift1;
    pts(static_cast<Eigen::Index>(i), 0) = a - std::floor(a);
    pts(static_cast<Eigen::Index>(i), 1) = b - std::floor(b);
  }
  return pts;
}

MvmdParams suggest_next(const std::optional<GpSurrogate>& surrogate, const SearchSpace& space,
                        const TrialHistory& history, std::uint64_t seed) {
  space.validate();
  if (!surrogate) return next_design_point(space, history, seed);

  double best = std::numeric_limits<double>::infinity();
  if (history.incumbent) best = history.best().objective;
  if (!std::isfinite(best)) best = surrogate->values().minCoeff();

  // A fresh rotation per step so successive candidate sets interleave.
  const Eigen::MatrixXd cand =
      quasi_random_points(kCandidateCount, seed + 0x51ed27ULL * (history.trials.size() + 1));
  std::vector<std::pair<double, MvmdParams>> scored;
  scored.reserve(kCandidateCount);
  for (Eigen::Index i = 0; i < cand.rows(); ++i) {
    const MvmdParams p = space.from_unit(cand.row(i).transpose());
    scored.emplace_back(expected_improvement(*surrogate, space.to_unit(p), best), p);
  }
  std::vector<std::size_t> order(scored.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scored[a].first > scored[b].first; });
  for (std::size_t i : order) {
    if (!history.contains(scored[i].second, space)) return scored[i].second;
  }
  throw NumericError("search space exhausted: every candidate is already in the history");
}

namespace {

Trial evaluate(const Objective& objective, const MvmdParams& params) {
  Trial trial;
  trial.params = params;
  const auto start = std::chrono::steady_clock::now();
  try {
    const Evaluation e = objective(params);
    trial.objective = e.value;
    trial.flag = e.flag.empty() ? kFlagOk : e.flag;
    if (!std::isfinite(e.value)) {
      trial.flag = kFlagFailed;
      trial.objective = std::numeric_limits<double>::infinity();
      trial.message = "objective returned a non-finite value";
    }
  } catch (const std::exception& ex) {
    trial.flag = kFlagFailed;
    trial.objective = std::numeric_limits<double>::infinity();
    trial.message = ex.what();
  }
  trial.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return trial;
}

std::optional<GpSurrogate> fit_history(const TrialHistory& history, const SearchSpace& space) {
  if (!history.incumbent) return std::nullopt;
  double worst = -std::numeric_limits<double>::infinity();
  for (const auto& t : history.trials) {
    if (!t.failed()) worst = std::max(worst, t.objective);
  }
  const auto n = static_cast<Eigen::Index>(history.trials.size());
  Eigen::MatrixXd x(n, 2);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& t = history.trials[static_cast<std::size_t>(i)];
    x.row(i) = space.to_unit(t.params).transpose();
    y[i] = t.failed() ? worst : t.objective;
  }
  try {
    return gp_fit_auto(x, y);
  } catch (const GpFitError&) {
    return std::nullopt;
  }
}

}  // namespace

TrialHistory minimize(const Objective& objective, const SearchSpace& space, const MinimizeOptions& options) {
  space.validate();
  if (options.n_init < 2) throw ConfigError("BO: n_init must be >= 2");
  if (options.budget < options.n_init) throw ConfigError("BO: budget must be >= n_init");

  TrialHistory history;
  for (std::size_t i = 0; i < options.budget; ++i) {
    std::optional<GpSurrogate> surrogate;
    if (i >= options.n_init) {
      surrogate = fit_history(history, space);
      if (surrogate) ++history.surrogate_fits;
    }
    const MvmdParams next = suggest_next(surrogate, space, history, options.seed);
    history.add(evaluate(objective, next));
    if (options.on_trial) options.on_trial(history.trials.back(), i);
  }
  if (!history.incumbent) {
    throw NumericError("Bayesian optimization: all " + std::to_string(options.budget) +
                       " evaluations failed");
  }
  return history;
}

TrialHistory random_search(const Objective& objective, const SearchSpace& space, std::size_t budget,
                           std::uint64_t seed) {
  space.validate();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  TrialHistory history;
  for (std::size_t i = 0; i < budget; ++i) {
    Eigen::Vector2d x;
    x[0] = u(rng);
    x[1] = u(rng);
    history.add(evaluate(objective, space.from_unit(x)));
  }
  return history;
}

void write_trials_csv(const TrialHistory& history, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "trial,K,alpha,objective,flag,seconds\n";
  char buf[160];
  for (std::size_t i = 0; i < history.trials.size(); ++i) {
    const auto& t = history.trials[i];
    std::snprintf(buf, sizeof buf, "%zu,%d,%.17g,%.17g,%s,%.6f\n", i + 1, t.params.modes, t.params.alpha,
                  t.objective, t.flag.c_str(), t.seconds);
    out << buf;
  }
}

void write_best_params(const TrialHistory& history, const std::filesystem::path& path) {
  const Trial& best = history.best();
  nlohmann::json j;
  j["K"] = best.params.modes;
  j["alpha"] = best.params.alpha;
  j["objective"] = best.objective;
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace mvmdlstm::bayes
