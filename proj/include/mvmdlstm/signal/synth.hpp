#pragma once

#include "mvmdlstm/signal/series.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace mvmdlstm::signal {

struct Tone {
  double amplitude = 1.0;
  double frequency = 0.0;  // cycles/sample, must stay below 0.5
  double phase = 0.0;      // radians
};

struct ChannelSynth {
  std::string name;
  double level = 0.0;
  std::vector<Tone> tones;
  double trend = 0.0;  // per sample
  /// Amplitude of a half-wave rectified daily sine, max(0, sin(2 pi t dt / 86400)).
  double diurnal_amplitude = 0.0;
  double noise_std = 0.0;
};

struct SynthSpec {
  std::size_t n_samples = 4000;
  double dt = 300.0;
  std::vector<ChannelSynth> channels;
  std::uint64_t seed = 42;
};

/// channel j at sample t:
///   level + sum tones a cos(2 pi f t + phase) + trend t + diurnal + N(0, noise_std^2)
/// Noise draws come from one mt19937_64 stream seeded with spec.seed, sample-major.
MultichannelSeries synth(const SynthSpec& spec);

void validate(const SynthSpec& spec);

/// Wind/solar/wave stand-in: wind dominated by fast tones, solar by the daily
/// cycle, wave by slow swell; trend, noise and level offsets on all three.
SynthSpec default_fixture_spec(std::uint64_t seed = 42);

/// Three identical channels of cos(2 pi 0.05 t) + cos(2 pi 0.2 t) with white
/// noise at the requested SNR (signal power / noise power, in dB).
SynthSpec two_tone_fixture_spec(std::size_t n_samples, double snr_db, std::uint64_t seed = 7);

}  // namespace mvmdlstm::signal
