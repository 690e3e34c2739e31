#include "mvmdlstm/mvmd/mvmd.hpp"

#include "mvmdlstm/error.hpp"
#include "mvmdlstm/signal/spectrum.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>

namespace mvmdlstm::mvmd {

std::string to_string(OmegaInit init) {
  switch (init) {
    case OmegaInit::uniform_grid: return "uniform-grid";
    case OmegaInit::zeros: return "zeros";
    case OmegaInit::random: return "random";
  }
  return "uniform-grid";
}

OmegaInit omega_init_from_string(const std::string& name) {
  if (name == "uniform-grid") return OmegaInit::uniform_grid;
  if (name == "zeros") return OmegaInit::zeros;
  if (name == "random") return OmegaInit::random;
  throw ConfigError("unknown omega_init '" + name + "' (uniform-grid, zeros, random)");
}

void MvmdConfig::validate() const {
  if (modes < 1) throw ConfigError("MVMD: K must be >= 1, got " + std::to_string(modes));
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ConfigError("MVMD: alpha must be > 0");
  if (!(tau >= 0.0) || !std::isfinite(tau)) throw ConfigError("MVMD: tau must be >= 0");
  if (!(tol > 0.0)) throw ConfigError("MVMD: tol must be > 0");
  if (max_iter < 1) throw ConfigError("MVMD: max_iter must be >= 1");
}

AdmmState initial_state(const signal::MultichannelSeries& mirrored, const MvmdConfig& config) {
  const auto n_time = static_cast<std::size_t>(mirrored.n_samples());
  const auto c = static_cast<std::size_t>(mirrored.n_channels());
  const auto k_modes = static_cast<std::size_t>(config.modes);

  AdmmState state;
  state.n_time = n_time;
  state.freqs = signal::half_spectrum_frequencies(n_time);
  const Eigen::Index m = state.freqs.size();
  for (std::size_t j = 0; j < c; ++j) {
    const Eigen::VectorXd col = mirrored.values().col(static_cast<Eigen::Index>(j));
    state.x_hat.push_back(signal::forward_half_spectrum({col.data(), n_time}).bins);
    state.lambda_hat.push_back(Eigen::ArrayXcd::Zero(m));
  }
  state.u_hat.assign(k_modes, std::vector<Eigen::ArrayXcd>(c, Eigen::ArrayXcd::Zero(m)));

  state.omega.resize(config.modes);
  switch (config.omega_init) {
    case OmegaInit::uniform_grid:
      for (int k = 0; k < config.modes; ++k) state.omega[k] = 0.5 * (k + 0.5) / config.modes;
      break;
    case OmegaInit::zeros:
      state.omega.setZero();
      break;
    case OmegaInit::random: {
      std::mt19937_64 rng(config.seed);
      std::uniform_real_distribution<double> u(0.0, 0.5);
      for (int k = 0; k < config.modes; ++k) state.omega[k] = u(rng);
      std::sort(state.omega.begin(), state.omega.end());
      break;
    }
  }
  return state;
}

Eigen::ArrayXcd update_mode(const Eigen::ArrayXcd& x_hat, const Eigen::ArrayXcd& lambda_hat,
                            const Eigen::ArrayXcd& others, const Eigen::ArrayXd& freqs,
                            double omega_k, double alpha) {
  const Eigen::ArrayXd gain = 1.0 / (1.0 + 2.0 * alpha * (freqs - omega_k).square());
  return (x_hat - others + 0.5 * lambda_hat) * gain.cast<std::complex<double>>();
}

std::optional<double> update_center_frequency(std::span<const Eigen::ArrayXcd> mode_channels,
                                              const Eigen::ArrayXd& freqs) {
  // Rectangle rule over the half grid; bin width cancels in the ratio.
  double num = 0.0;
  double den = 0.0;
  for (const auto& u : mode_channels) {
    const Eigen::ArrayXd power = u.abs2();
    num += (freqs * power).sum();
    den += power.sum();
  }
  if (!(den > 0.0)) return std::nullopt;
  return num / den;
}

Eigen::ArrayXcd update_multiplier(const Eigen::ArrayXcd& lambda_hat, const Eigen::ArrayXcd& x_hat,
                                  const Eigen::ArrayXcd& mode_sum, double tau) {
  if (tau == 0.0) return lambda_hat;
  return lambda_hat + tau * (x_hat - mode_sum);
}

SweepResult admm_sweep(AdmmState& state, const MvmdConfig& config) {
  const std::size_t k_modes = state.u_hat.size();
  const std::size_t c = state.x_hat.size();
  SweepResult result;

  // Running per-channel total of the current iterate keeps each mode update O(M).
  std::vector<Eigen::ArrayXcd> total(c);
  for (std::size_t j = 0; j < c; ++j) {
    total[j] = Eigen::ArrayXcd::Zero(state.freqs.size());
    for (std::size_t k = 0; k < k_modes; ++k) total[j] += state.u_hat[k][j];
  }

  for (std::size_t k = 0; k < k_modes; ++k) {
    for (std::size_t j = 0; j < c; ++j) {
      Eigen::ArrayXcd& u = state.u_hat[k][j];
      const Eigen::ArrayXcd others = total[j] - u;
      Eigen::ArrayXcd fresh = update_mode(state.x_hat[j], state.lambda_hat[j], others, state.freqs,
                                          state.omega[static_cast<Eigen::Index>(k)], config.alpha);
      const double prev_norm = u.abs2().sum();
      const double diff_norm = (fresh - u).abs2().sum();
      if (prev_norm > 0.0) {
        result.relative_change += diff_norm / prev_norm;
      } else if (diff_norm > 0.0) {
        result.relative_change = std::numeric_limits<double>::infinity();
      }
      total[j] = others + fresh;
      u = std::move(fresh);
    }
    if (auto w = update_center_frequency(state.u_hat[k], state.freqs)) {
      state.omega[static_cast<Eigen::Index>(k)] = *w;
    } else {
      ++result.zero_energy_modes;
    }
  }

  for (std::size_t j = 0; j < c; ++j) {
    state.lambda_hat[j] = update_multiplier(state.lambda_hat[j], state.x_hat[j], total[j], config.tau);
  }
  return result;
}

std::vector<double> relative_l2_error(const Eigen::MatrixXd& reference,
                                      const Eigen::MatrixXd& approx) {
  std::vector<double> err;
  for (Eigen::Index j = 0; j < reference.cols(); ++j) {
    const double ref = reference.col(j).norm();
    const double diff = (reference.col(j) - approx.col(j)).norm();
    if (ref > 0.0) {
      err.push_back(diff / ref);
    } else {
      err.push_back(diff > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
    }
  }
  return err;
}

ModeSet decompose(const signal::MultichannelSeries& series, const MvmdConfig& config) {
  config.validate();
  const Eigen::Index n = series.n_samples();
  if (n < 4 * static_cast<Eigen::Index>(config.modes)) {
    throw ConfigError("MVMD: N=" + std::to_string(n) + " is too short for K=" +
                      std::to_string(config.modes) + " (need N >= 4K)");
  }

  const auto mirrored = signal::mirror_extend(series);
  AdmmState state = initial_state(mirrored, config);

  ModeSet out;
  out.dt = series.dt();
  out.channel_names = series.channel_names();
  out.final_residual = std::numeric_limits<double>::infinity();
  for (int it = 1; it <= config.max_iter; ++it) {
    const SweepResult sweep = admm_sweep(state, config);
    out.iterations_run = it;
    out.final_residual = sweep.relative_change;
    out.zero_energy_updates += sweep.zero_energy_modes;
    if (sweep.relative_change < config.tol) {
      out.converged = true;
      break;
    }
  }

  std::vector<std::size_t> order(static_cast<std::size_t>(config.modes));
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return state.omega[static_cast<Eigen::Index>(a)] < state.omega[static_cast<Eigen::Index>(b)];
  });

  const Eigen::Index offset = signal::mirror_offset(n);
  const Eigen::Index c = series.n_channels();
  out.omega.resize(config.modes);
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    const std::size_t k = order[rank];
    out.omega[static_cast<Eigen::Index>(rank)] =
        std::clamp(state.omega[static_cast<Eigen::Index>(k)], 0.0, 0.5);
    Eigen::MatrixXd mode(n, c);
    for (Eigen::Index j = 0; j < c; ++j) {
      signal::HalfSpectrum spec{state.u_hat[k][static_cast<std::size_t>(j)], state.n_time};
      mode.col(j) = signal::inverse_half_spectrum(spec).segment(offset, n);
    }
    out.modes.push_back(std::move(mode));
  }

  out.reconstruction_error = relative_l2_error(series.values(), reconstruct(out).values());
  return out;
}

signal::MultichannelSeries reconstruct(const ModeSet& modeset) {
  if (modeset.modes.empty()) throw DataError("reconstruct: empty ModeSet");
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(modeset.n_samples(), modeset.n_channels());
  for (const auto& mode : modeset.modes) sum += mode;
  auto names = modeset.channel_names;
  if (static_cast<Eigen::Index>(names.size()) != sum.cols()) {
    names = signal::default_channel_names(sum.cols());
  }
  return signal::MultichannelSeries(std::move(sum), modeset.dt, std::move(names));
}

void write_modeset(const ModeSet& modeset, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  char buf[64];
  {
    std::ofstream out(dir / "omega.csv");
    if (!out) throw DataError("cannot write " + (dir / "omega.csv").string());
    out << "k,omega\n";
    for (Eigen::Index k = 0; k < modeset.n_modes(); ++k) {
      std::snprintf(buf, sizeof buf, "%ld,%.17g\n", static_cast<long>(k + 1), modeset.omega[k]);
      out << buf;
    }
  }
  for (Eigen::Index k = 0; k < modeset.n_modes(); ++k) {
    for (Eigen::Index j = 0; j < modeset.n_channels(); ++j) {
      const auto path = dir / ("mode_k" + std::to_string(k + 1) + "_ch" + std::to_string(j + 1) + ".csv");
      std::ofstream out(path);
      if (!out) throw DataError("cannot write " + path.string());
      out << "t,value\n";
      const auto& mode = modeset.modes[static_cast<std::size_t>(k)];
      for (Eigen::Index t = 0; t < mode.rows(); ++t) {
        std::snprintf(buf, sizeof buf, "%ld,%.17g\n", static_cast<long>(t), mode(t, j));
        out << buf;
      }
    }
  }
  nlohmann::json diag;
  diag["iterations_run"] = modeset.iterations_run;
  diag["final_residual"] = std::isfinite(modeset.final_residual) ? nlohmann::json(modeset.final_residual)
                                                                 : nlohmann::json("inf");
  diag["converged"] = modeset.converged;
  diag["zero_energy_updates"] = modeset.zero_energy_updates;
  diag["reconstruction_error"] = modeset.reconstruction_error;
  diag["channels"] = modeset.channel_names;
  std::ofstream out(dir / "diagnostics.json");
  if (!out) throw DataError("cannot write " + (dir / "diagnostics.json").string());
  out << diag.dump(2) << '\n';
}

}  // namespace mvmdlstm::mvmd
