#pragma once

#include "mvmdlstm/bayes/gp.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace mvmdlstm::bayes {

struct MvmdParams {
  int modes = 5;
  double alpha = 2000.0;

  bool operator==(const MvmdParams&) const = default;
};

/// (K, alpha) box. K is integer; alpha is searched on a log10 scale. Equal
/// bounds pin a dimension.
struct SearchSpace {
  int k_min = 3;
  int k_max = 10;
  double alpha_min = 1e2;
  double alpha_max = 1e4;

  void validate() const;

  /// K relaxes to a continuous coordinate; pinned dimensions map to 0.5.
  Eigen::Vector2d to_unit(const MvmdParams& params) const;
  /// Inverse of to_unit with K rounded half away from zero and clamped.
  MvmdParams from_unit(const Eigen::Ref<const Eigen::Vector2d>& unit) const;
  bool contains(const MvmdParams& params) const;
};

inline const std::string kFlagOk = "ok";
inline const std::string kFlagFailed = "failed";

struct Trial {
  MvmdParams params;
  double objective = 0.0;
  double seconds = 0.0;
  std::string flag = kFlagOk;  // "ok", "failed", or an objective-supplied flag such as "nonconverged"
  std::string message;         // failure text, empty otherwise

  bool failed() const noexcept { return flag == kFlagFailed; }
};

struct TrialHistory {
  std::vector<Trial> trials;
  std::optional<std::size_t> incumbent;  // index into trials
  std::size_t surrogate_fits = 0;

  void add(Trial trial);
  const Trial& best() const;
  bool contains(const MvmdParams& params, const SearchSpace& space) const;
};

/// What an objective reports back: a value and an optional flag.
struct Evaluation {
  double value = 0.0;
  std::string flag = kFlagOk;
};

using Objective = std::function<Evaluation(const MvmdParams&)>;

/// Halton (bases 2, 3) points with a seeded Cranley-Patterson rotation, rows
/// in [0, 1)^2. `skip` advances the sequence.
Eigen::MatrixXd quasi_random_points(std::size_t count, std::uint64_t seed, std::size_t skip = 0);

constexpr std::size_t kCandidateCount = 2048;

/// With an empty history (no surrogate yet) pass std::nullopt: the next
/// point of the initial design is returned. Otherwise maximizes EI over
/// kCandidateCount quasi-random candidates, skipping ones whose rounded
/// parameters are already in the history. Throws NumericError if every
/// candidate is taken.
MvmdParams suggest_next(const std::optional<GpSurrogate>& surrogate, const SearchSpace& space,
                        const TrialHistory& history, std::uint64_t seed);

struct MinimizeOptions {
  std::size_t budget = 25;
  std::size_t n_init = 5;
  std::uint64_t seed = 0;
  /// Called after every trial (progress reporting); may be empty.
  std::function<void(const Trial&, std::size_t index)> on_trial;
};

/// n_init design points, then fit -> suggest -> evaluate until the budget is
/// spent. Exceptions from the objective become "failed" trials with an
/// objective of +inf; they never become the incumbent. For the surrogate
/// they are imputed at the worst successful value.
TrialHistory minimize(const Objective& objective, const SearchSpace& space, const MinimizeOptions& options);

/// Uniform random search with the same trial bookkeeping, for comparisons.
TrialHistory random_search(const Objective& objective, const SearchSpace& space, std::size_t budget,
                           std::uint64_t seed);

/// trials.csv: trial,K,alpha,objective,flag,seconds (trial is 1-based).
void write_trials_csv(const TrialHistory& history, const std::filesystem::path& path);
/// best_params.json: {K, alpha, objective}.
void write_best_params(const TrialHistory& history, const std::filesystem::path& path);

}  // namespace mvmdlstm::bayes
