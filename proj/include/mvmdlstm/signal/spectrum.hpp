#pragma once

#include <Eigen/Core>

#include <complex>
#include <cstddef>
#include <span>

namespace mvmdlstm::signal {

/// Non-negative-frequency half of the DFT of a real series.
///
/// Convention: bins[k] = sum_t x[t] exp(-2 pi i k t / n), k = 0 .. n/2, so the
/// forward transform is unnormalized and the inverse carries the 1/n factor.
/// Bin k sits at normalized frequency k / n cycles/sample, which puts the grid
/// inside [0, 0.5]. Dropping the negative half is the analytic-signal view:
/// the conjugate-symmetric half is implied.
struct HalfSpectrum {
  Eigen::ArrayXcd bins;
  std::size_t n_time = 0;

  Eigen::Index size() const noexcept { return bins.size(); }
};

inline Eigen::Index half_spectrum_size(std::size_t n_time) {
  return static_cast<Eigen::Index>(n_time / 2 + 1);
}

HalfSpectrum forward_half_spectrum(std::span<const double> channel);
Eigen::VectorXd inverse_half_spectrum(const HalfSpectrum& spectrum);

/// Frequencies (cycles/sample) of every bin of a half spectrum of length n_time.
Eigen::ArrayXd half_spectrum_frequencies(std::size_t n_time);

/// Bins whose mirror image exists in the full spectrum count twice; DC and
/// (for even n) Nyquist once.
Eigen::ArrayXd half_spectrum_weights(std::size_t n_time);

/// Time-domain energy implied by the spectrum under the convention above,
/// i.e. sum_t x[t]^2 by Parseval.
double spectral_energy(const HalfSpectrum& spectrum);

}  // namespace mvmdlstm::signal
