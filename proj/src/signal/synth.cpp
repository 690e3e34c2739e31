#include "mvmdlstm/signal/synth.hpp"

#include "mvmdlstm/error.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace mvmdlstm::signal {

void validate(const SynthSpec& spec) {
  if (spec.n_samples < 2) throw ConfigError("synth: n_samples must be >= 2");
  if (!(spec.dt > 0.0)) throw ConfigError("synth: dt must be positive");
  if (spec.channels.empty()) throw ConfigError("synth: at least one channel required");
  for (const auto& ch : spec.channels) {
    for (const auto& tone : ch.tones) {
      if (!(tone.frequency >= 0.0 && tone.frequency < 0.5)) {
        throw AliasingError("synth: tone frequency " + std::to_string(tone.frequency) +
                            " in channel '" + ch.name + "' is outside [0, 0.5)");
      }
    }
    if (ch.diurnal_amplitude != 0.0 && spec.dt / 86400.0 >= 0.5) {
      throw AliasingError("synth: dt too coarse to represent a daily cycle");
    }
    if (ch.noise_std < 0.0) throw ConfigError("synth: noise_std must be >= 0");
  }
}

MultichannelSeries synth(const SynthSpec& spec) {
  validate(spec);
  const auto n = static_cast<Eigen::Index>(spec.n_samples);
  const auto c = static_cast<Eigen::Index>(spec.channels.size());
  constexpr double two_pi = 2.0 * std::numbers::pi;
  const double day_freq = spec.dt / 86400.0;

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  Eigen::MatrixXd values(n, c);
  std::vector<std::string> names;
  for (Eigen::Index j = 0; j < c; ++j) {
    const auto& ch = spec.channels[static_cast<std::size_t>(j)];
    names.push_back(ch.name.empty() ? "ch" + std::to_string(j + 1) : ch.name);
  }
  for (Eigen::Index t = 0; t < n; ++t) {
    const double td = static_cast<double>(t);
    for (Eigen::Index j = 0; j < c; ++j) {
      const auto& ch = spec.channels[static_cast<std::size_t>(j)];
      double v = ch.level + ch.trend * td;
      for (const auto& tone : ch.tones) {
        v += tone.amplitude * std::cos(two_pi * tone.frequency * td + tone.phase);
      }
      if (ch.diurnal_amplitude != 0.0) {
        v += ch.diurnal_amplitude * std::max(0.0, std::sin(two_pi * day_freq * td));
      }
      if (ch.noise_std > 0.0) v += ch.noise_std * gauss(rng);
      values(t, j) = v;
    }
  }
  return MultichannelSeries(std::move(values), spec.dt, std::move(names));
}

SynthSpec default_fixture_spec(std::uint64_t seed) {
  SynthSpec spec;
  spec.n_samples = 4000;
  spec.dt = 300.0;
  spec.seed = seed;

  ChannelSynth wind;
  wind.name = "wind";
  wind.level = 3.0;
  wind.tones = {{1.0, 0.081, 0.0}, {0.6, 0.187, 1.1}, {0.8, 0.012, 0.4}};
  wind.trend = 2.5e-4;
  wind.diurnal_amplitude = 0.5;
  wind.noise_std = 0.2;

  ChannelSynth solar;
  solar.name = "solar";
  solar.level = 1.0;
  solar.tones = {{2.0, 1.0 / 144.0, 0.3}, {0.6, 0.047, 0.0}};
  solar.diurnal_amplitude = 30.0;
  solar.noise_std = 0.6;

  ChannelSynth wave;
  wave.name = "wave";
  wave.level = 22.0;
  wave.tones = {{6.0, 0.0041, 0.2}, {2.0, 0.016, 1.3}, {0.7, 0.063, 2.0}};
  wave.trend = 1.2e-3;
  wave.diurnal_amplitude = 1.0;
  wave.noise_std = 0.5;

  spec.channels = {wind, solar, wave};
  return spec;
}

SynthSpec two_tone_fixture_spec(std::size_t n_samples, double snr_db, std::uint64_t seed) {
  SynthSpec spec;
  spec.n_samples = n_samples;
  spec.seed = seed;
  // Two unit cosines carry power 1/2 each.
  const double noise_power = 1.0 / std::pow(10.0, snr_db / 10.0);
  const double noise_std = std::isfinite(snr_db) ? std::sqrt(noise_power) : 0.0;
  for (const char* name : {"ch1", "ch2", "ch3"}) {
    ChannelSynth ch;
    ch.name = name;
    ch.tones = {{1.0, 0.05, 0.0}, {1.0, 0.20, 0.0}};
    ch.noise_std = noise_std;
    spec.channels.push_back(ch);
  }
  return spec;
}

}  // namespace mvmdlstm::signal
