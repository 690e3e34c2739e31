#pragma once

#include "mvmdlstm/signal/series.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mvmdlstm::mvmd {

enum class OmegaInit { uniform_grid, zeros, random };

std::string to_string(OmegaInit init);
OmegaInit omega_init_from_string(const std::string& name);

struct MvmdConfig {
  int modes = 5;          // K
  double alpha = 2000.0;  // bandwidth penalty
  double tau = 0.0;       // dual ascent step; 0 disables the multiplier update
  double tol = 1e-7;
  int max_iter = 500;
  OmegaInit omega_init = OmegaInit::uniform_grid;
  std::uint64_t seed = 0;  // only used by OmegaInit::random

  /// Throws ConfigError when K < 1, alpha <= 0, tau < 0, tol <= 0 or max_iter < 1.
  void validate() const;
};

/// Decomposition result. All channels share the single `omega` vector; that is
/// what makes the decomposition multivariate rather than C independent VMDs.
struct ModeSet {
  std::vector<Eigen::MatrixXd> modes;  // K entries of N x C
  Eigen::VectorXd omega;               // K center frequencies, ascending, cycles/sample
  int iterations_run = 0;
  double final_residual = 0.0;
  bool converged = false;
  int zero_energy_updates = 0;  // frequency updates skipped for lack of mode energy
  std::vector<double> reconstruction_error;  // per channel, relative L2 vs the input
  double dt = 300.0;
  std::vector<std::string> channel_names;

  Eigen::Index n_modes() const noexcept { return omega.size(); }
  Eigen::Index n_channels() const noexcept {
    return modes.empty() ? 0 : modes.front().cols();
  }
  Eigen::Index n_samples() const noexcept {
    return modes.empty() ? 0 : modes.front().rows();
  }
  Eigen::VectorXd imf(Eigen::Index k, Eigen::Index j) const { return modes[static_cast<std::size_t>(k)].col(j); }
};

ModeSet decompose(const signal::MultichannelSeries& series, const MvmdConfig& config);

/// channel j = sum_k modes[k](:, j).
signal::MultichannelSeries reconstruct(const ModeSet& modeset);

/// Relative L2 distance per channel; 0 when both sides are zero.
std::vector<double> relative_l2_error(const Eigen::MatrixXd& reference,
                                      const Eigen::MatrixXd& approx);

/// omega.csv, mode_k<k>_ch<j>.csv (1-based k and j) and diagnostics.json.
void write_modeset(const ModeSet& modeset, const std::filesystem::path& dir);

// --- ADMM internals, exposed for verification ------------------------------

/// Half spectra of the mirrored signal plus the iterate.
struct AdmmState {
  std::size_t n_time = 0;                        // mirrored length
  Eigen::ArrayXd freqs;                          // bin frequencies, cycles/sample
  std::vector<Eigen::ArrayXcd> x_hat;            // [j]
  std::vector<Eigen::ArrayXcd> lambda_hat;       // [j]
  std::vector<std::vector<Eigen::ArrayXcd>> u_hat;  // [k][j]
  Eigen::VectorXd omega;                         // [k]
};

AdmmState initial_state(const signal::MultichannelSeries& mirrored, const MvmdConfig& config);

/// Wiener-filter mode update. `others` is sum_{i<k} u_i^{n+1} + sum_{i>k} u_i^n.
Eigen::ArrayXcd update_mode(const Eigen::ArrayXcd& x_hat, const Eigen::ArrayXcd& lambda_hat,
                            const Eigen::ArrayXcd& others, const Eigen::ArrayXd& freqs,
                            double omega_k, double alpha);

/// Energy-weighted spectral centroid pooled over channels; nullopt when all
/// channels carry zero energy in this mode.
std::optional<double> update_center_frequency(std::span<const Eigen::ArrayXcd> mode_channels,
                                              const Eigen::ArrayXd& freqs);

Eigen::ArrayXcd update_multiplier(const Eigen::ArrayXcd& lambda_hat, const Eigen::ArrayXcd& x_hat,
                                  const Eigen::ArrayXcd& mode_sum, double tau);

struct SweepResult {
  double relative_change = 0.0;  // sum_{j,k} |u^{n+1}-u^n|^2 / |u^n|^2
  int zero_energy_modes = 0;
};

/// One Gauss-Seidel pass: modes then frequency for k = 1..K, then multipliers.
SweepResult admm_sweep(AdmmState& state, const MvmdConfig& config);

}  // namespace mvmdlstm::mvmd
