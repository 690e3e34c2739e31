#include "mvmdlstm/signal/spectrum.hpp"

#include "mvmdlstm/error.hpp"

#include <fftw3.h>

#include <algorithm>
#include <memory>
#include <mutex>
#include <optional>

namespace mvmdlstm::signal {
namespace {

// FFTW's planner is not re-entrant; plan execution is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwFree {
  void operator()(void* p) const noexcept { fftw_free(p); }
};

template <typename T>
using FftwBuffer = std::unique_ptr<T[], FftwFree>;

template <typename T>
FftwBuffer<T> fftw_buffer(std::size_t n) {
  auto* p = static_cast<T*>(fftw_malloc(sizeof(T) * std::max<std::size_t>(n, 1)));
  if (p == nullptr) throw std::bad_alloc();
  return FftwBuffer<T>(p);
}

class Plan {
 public:
  explicit Plan(fftw_plan p) : plan_(p) {
    if (plan_ == nullptr) throw NumericError("FFTW failed to create a plan");
  }
  Plan(const Plan&) = delete;
  Plan& operator=(const Plan&) = delete;
  ~Plan() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan_);
  }
  void execute() const { fftw_execute(plan_); }

 private:
  fftw_plan plan_;
};

}  // namespace

HalfSpectrum forward_half_spectrum(std::span<const double> channel) {
  const std::size_t n = channel.size();
  if (n < 2) throw DataError("spectrum needs at least 2 samples");
  const std::size_t m = n / 2 + 1;

  auto in = fftw_buffer<double>(n);
  auto out = fftw_buffer<fftw_complex>(m);
  std::optional<Plan> plan;
  {
    std::lock_guard lock(planner_mutex());
    plan.emplace(fftw_plan_dft_r2c_1d(static_cast<int>(n), in.get(), out.get(), FFTW_ESTIMATE));
  }
  std::copy(channel.begin(), channel.end(), in.get());
  plan->execute();

  HalfSpectrum spec;
  spec.n_time = n;
  spec.bins.resize(static_cast<Eigen::Index>(m));
  for (std::size_t k = 0; k < m; ++k) {
    spec.bins[static_cast<Eigen::Index>(k)] = {out[k][0], out[k][1]};
  }
  return spec;
}

Eigen::VectorXd inverse_half_spectrum(const HalfSpectrum& spectrum) {
  const std::size_t n = spectrum.n_time;
  if (n < 2) throw DataError("spectrum needs at least 2 samples");
  const std::size_t m = n / 2 + 1;
  if (static_cast<std::size_t>(spectrum.bins.size()) != m) {
    throw DataError("half spectrum has " + std::to_string(spectrum.bins.size()) +
                    " bins, expected " + std::to_string(m));
  }

  auto in = fftw_buffer<fftw_complex>(m);
  auto out = fftw_buffer<double>(n);
  std::optional<Plan> plan;
  {
    std::lock_guard lock(planner_mutex());
    plan.emplace(fftw_plan_dft_c2r_1d(static_cast<int>(n), in.get(), out.get(), FFTW_ESTIMATE));
  }
  for (std::size_t k = 0; k < m; ++k) {
    const auto& b = spectrum.bins[static_cast<Eigen::Index>(k)];
    in[k][0] = b.real();
    in[k][1] = b.imag();
  }
  // c2r reads only the real part of DC and Nyquist; the imaginary parts of a
  // real signal's spectrum are zero there.
  plan->execute();

  Eigen::VectorXd x(static_cast<Eigen::Index>(n));
  const double scale = 1.0 / static_cast<double>(n);
  for (std::size_t t = 0; t < n; ++t) x[static_cast<Eigen::Index>(t)] = out[t] * scale;
  return x;
}

Eigen::ArrayXd half_spectrum_frequencies(std::size_t n_time) {
  const Eigen::Index m = half_spectrum_size(n_time);
  return Eigen::ArrayXd::LinSpaced(m, 0.0, static_cast<double>(m - 1)) /
         static_cast<double>(n_time);
}

Eigen::ArrayXd half_spectrum_weights(std::size_t n_time) {
  const Eigen::Index m = half_spectrum_size(n_time);
  Eigen::ArrayXd w = Eigen::ArrayXd::Constant(m, 2.0);
  w[0] = 1.0;
  if (n_time % 2 == 0) w[m - 1] = 1.0;
  return w;
}

double spectral_energy(const HalfSpectrum& spectrum) {
  const Eigen::ArrayXd w = half_spectrum_weights(spectrum.n_time);
  return (w * spectrum.bins.abs2()).sum() / static_cast<double>(spectrum.n_time);
}

}  // namespace mvmdlstm::signal
