#pragma once

// Synthetic multichannel recordings with known coupling structure. Each
// gesture is a fixed 12 x S mixing pattern over S shared band-limited noise
// sources; every trial draws fresh source realisations, jitters the
// mixing weights and adds independent sensor noise. Gestures therefore
// differ in their coherence graphs, not in signal power.

#include <array>
#include <cstdint>
#include <vector>

#include "cohnet/datamodel.hpp"
#include "cohnet/dsp.hpp"
#include "cohnet/random.hpp"

namespace cohnet::synthetic {

struct Params {
  int num_gestures{kNumGestures};
  int num_repetitions{kNumRepetitions};
  std::size_t trial_samples{10000};  // 5 s at 2 kHz
  std::size_t rest_samples{2000};
  std::size_t num_sources{6};
  std::size_t sources_per_channel{2};
  double sensor_noise{0.6};
  double mixing_jitter{0.15};
  // Seeds the gesture patterns. Subjects sharing it share gesture patterns.
  std::uint64_t pattern_seed{20240901};
};

using Mixing = std::vector<std::array<double, kNumChannels>>;  // [source][channel]

inline Mixing gesture_mixing(const Params& p, int gesture) {
  SplitMix64 rng(mix_seed(p.pattern_seed, static_cast<std::uint64_t>(gesture)));
  Mixing m(p.num_sources);
  for (auto& row : m) row.fill(0.0);
  for (std::size_t c = 0; c < kNumChannels; ++c) {
    for (std::size_t k = 0; k < p.sources_per_channel; ++k) {
      const auto s = rng.below(p.num_sources);
      m[s][c] += rng.uniform(0.5, 1.5);
    }
  }
  return m;
}

// Source s occupies its own band inside the 20-500 Hz range.
inline std::vector<dsp::IirFilter> source_filters(const Params& p, double fs) {
  std::vector<dsp::IirFilter> out;
  for (std::size_t s = 0; s < p.num_sources; ++s) {
    const double lo = 20.0 + 60.0 * static_cast<double>(s);
    out.push_back(dsp::design_butterworth_bandpass(2, lo, lo + 180.0, fs));
  }
  return out;
}

inline SubjectDataset make_subject(const Params& p, int subject_id, std::uint64_t seed) {
  const double fs = kDb2SampleRateHz;
  SplitMix64 rng(mix_seed(seed, static_cast<std::uint64_t>(subject_id)));
  const auto filters = source_filters(p, fs);

  SubjectDataset ds;
  ds.subject_id = subject_id;
  ds.channels.resize(kNumChannels);
  for (auto& ch : ds.channels) ch.sample_rate_hz = fs;

  auto append_rest = [&] {
    for (std::size_t t = 0; t < p.rest_samples; ++t) {
      for (auto& ch : ds.channels) ch.samples.push_back(p.sensor_noise * rng.normal());
      ds.stimulus.push_back(0);
      ds.repetition.push_back(0);
    }
  };

  append_rest();
  for (int g = 1; g <= p.num_gestures; ++g) {
    const auto base = gesture_mixing(p, g);
    for (int r = 1; r <= p.num_repetitions; ++r) {
      std::vector<std::vector<double>> sources(p.num_sources);
      for (std::size_t s = 0; s < p.num_sources; ++s) {
        std::vector<double> w(p.trial_samples);
        for (double& v : w) v = rng.normal();
        sources[s] = dsp::filtfilt(filters[s], w);
      }
      for (std::size_t c = 0; c < kNumChannels; ++c) {
        std::vector<double> gains(p.num_sources);
        for (std::size_t s = 0; s < p.num_sources; ++s) {
          gains[s] = base[s][c] * (1.0 + p.mixing_jitter * rng.uniform(-1.0, 1.0));
        }
        auto& out = ds.channels[c].samples;
        for (std::size_t t = 0; t < p.trial_samples; ++t) {
          double v = p.sensor_noise * rng.normal();
          for (std::size_t s = 0; s < p.num_sources; ++s) v += gains[s] * sources[s][t];
          out.push_back(v);
        }
      }
      ds.stimulus.insert(ds.stimulus.end(), p.trial_samples, g);
      ds.repetition.insert(ds.repetition.end(), p.trial_samples, r);
      append_rest();
    }
  }
  validate(ds);
  return ds;
}

}  // namespace cohnet::synthetic
