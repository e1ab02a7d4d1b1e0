#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "cohnet/error.hpp"

namespace cohnet {

inline constexpr std::size_t kNumChannels = 12;
inline constexpr int kNumGestures = 17;
inline constexpr int kNumRepetitions = 6;
inline constexpr double kDb2SampleRateHz = 2000.0;

struct ChannelSignal {
  std::vector<double> samples;
  double sample_rate_hz{kDb2SampleRateHz};

  std::size_t size() const noexcept { return samples.size(); }
  bool empty() const noexcept { return samples.empty(); }
  std::span<const double> view() const noexcept { return samples; }
};

inline void validate(const ChannelSignal& signal) {
  if (!(signal.sample_rate_hz > 0.0)) {
    throw ConfigError("sample rate must be positive");
  }
}

// One subject's raw recording: 12 sEMG channels plus the per-sample gesture
// (0 = rest) and repetition (0 = rest) label streams.
struct SubjectDataset {
  int subject_id{0};
  std::vector<ChannelSignal> channels;
  std::vector<int> stimulus;
  std::vector<int> repetition;

  std::size_t num_samples() const noexcept { return stimulus.size(); }
  double sample_rate_hz() const noexcept {
    return channels.empty() ? kDb2SampleRateHz : channels.front().sample_rate_hz;
  }
};

inline void validate(const SubjectDataset& ds) {
  if (ds.channels.size() != kNumChannels) {
    throw ShapeError("subject " + std::to_string(ds.subject_id) + ": expected " +
                     std::to_string(kNumChannels) + " channels, got " +
                     std::to_string(ds.channels.size()));
  }
  const std::size_t n = ds.stimulus.size();
  if (ds.repetition.size() != n) {
    throw ShapeError("repetition stream length " + std::to_string(ds.repetition.size()) +
                     " != stimulus stream length " + std::to_string(n));
  }
  const double fs = ds.channels.front().sample_rate_hz;
  for (std::size_t c = 0; c < ds.channels.size(); ++c) {
    validate(ds.channels[c]);
    if (ds.channels[c].size() != n) {
      throw ShapeError("channel " + std::to_string(c + 1) + " has " +
                       std::to_string(ds.channels[c].size()) + " samples, label streams have " +
                       std::to_string(n));
    }
    if (ds.channels[c].sample_rate_hz != fs) {
      throw ShapeError("channels disagree on sample rate");
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (ds.stimulus[i] < 0 || ds.stimulus[i] > kNumGestures) {
      throw StructuralError("stimulus label " + std::to_string(ds.stimulus[i]) +
                            " out of range at sample " + std::to_string(i));
    }
    if (ds.repetition[i] < 0 || ds.repetition[i] > kNumRepetitions) {
      throw StructuralError("repetition label " + std::to_string(ds.repetition[i]) +
                            " out of range at sample " + std::to_string(i));
    }
  }
}

// A single labeled (gesture, repetition) span cut out of a SubjectDataset.
// [begin, end) are sample indices into the source recording.
struct TrialSegment {
  int gesture{0};
  int repetition{0};
  std::size_t begin{0};
  std::size_t end{0};
  std::vector<ChannelSignal> channels;

  std::size_t length() const noexcept { return end - begin; }
};

struct TrialKey {
  int gesture{0};
  int repetition{0};
  auto operator<=>(const TrialKey&) const = default;
};

inline std::string to_string(const TrialKey& key) {
  return "(g=" + std::to_string(key.gesture) + ", r=" + std::to_string(key.repetition) + ")";
}

struct SplitSpec {
  std::set<int> train_repetitions{1, 3, 4, 6};
  std::set<int> test_repetitions{2, 5};
};

inline void validate(const SplitSpec& spec) {
  if (spec.train_repetitions.empty() || spec.test_repetitions.empty()) {
    throw ConfigError("split: train and test repetition sets must both be nonempty");
  }
  for (const auto* set : {&spec.train_repetitions, &spec.test_repetitions}) {
    for (int r : *set) {
      if (r < 1 || r > kNumRepetitions) {
        throw ConfigError("split: repetition " + std::to_string(r) + " outside 1.." +
                          std::to_string(kNumRepetitions));
      }
    }
  }
  for (int r : spec.train_repetitions) {
    if (spec.test_repetitions.contains(r)) {
      throw ConfigError("split: repetition " + std::to_string(r) + " is in both train and test");
    }
  }
}

struct SegmentOptions {
  // Runs shorter than this are rejected. The default is twice the default
  // Welch window; a single Welch segment makes MSC identically 1.
  std::size_t min_length{1200};
};

// Cuts the recording into one TrialSegment per maximal run of constant,
// nonzero (stimulus, repetition). Output is ordered by position in the
// recording.
inline std::vector<TrialSegment> segment_trials(const SubjectDataset& ds,
                                                const SegmentOptions& options = {}) {
  validate(ds);
  std::vector<TrialSegment> out;
  std::set<TrialKey> seen;
  const std::size_t n = ds.num_samples();
  std::size_t i = 0;
  while (i < n) {
    const int g = ds.stimulus[i];
    const int r = ds.repetition[i];
    if (g == 0) {
      ++i;
      continue;
    }
    std::size_t j = i + 1;
    while (j < n && ds.stimulus[j] == g && ds.repetition[j] == r) ++j;
    if (r == 0) {
      throw StructuralError("subject " + std::to_string(ds.subject_id) + ": gesture " +
                            std::to_string(g) + " active over samples [" + std::to_string(i) +
                            ", " + std::to_string(j) + ") without a repetition label");
    }
    const TrialKey key{g, r};
    if (!seen.insert(key).second) {
      throw StructuralError("subject " + std::to_string(ds.subject_id) + ": trial " +
                            to_string(key) + " appears in more than one run (second run at sample " +
                            std::to_string(i) + ")");
    }
    if (j - i < options.min_length) {
      throw SegmentTooShortError("subject " + std::to_string(ds.subject_id) + ": trial " +
                                 to_string(key) + " has " + std::to_string(j - i) +
                                 " samples, minimum is " + std::to_string(options.min_length));
    }
    TrialSegment seg;
    seg.gesture = g;
    seg.repetition = r;
    seg.begin = i;
    seg.end = j;
    seg.channels.reserve(ds.channels.size());
    for (const auto& ch : ds.channels) {
      ChannelSignal slice;
      slice.sample_rate_hz = ch.sample_rate_hz;
      slice.samples.assign(ch.samples.begin() + static_cast<std::ptrdiff_t>(i),
                           ch.samples.begin() + static_cast<std::ptrdiff_t>(j));
      seg.channels.push_back(std::move(slice));
    }
    out.push_back(std::move(seg));
    i = j;
  }
  return out;
}

// Lists the (gesture, repetition) pairs of the expected grid that have no
// segment. Empty result means the subject is complete.
inline std::vector<TrialKey> missing_trials(std::span<const TrialSegment> segments,
                                            int num_gestures = kNumGestures,
                                            int num_repetitions = kNumRepetitions) {
  std::set<TrialKey> present;
  for (const auto& s : segments) present.insert({s.gesture, s.repetition});
  std::vector<TrialKey> missing;
  for (int g = 1; g <= num_gestures; ++g) {
    for (int r = 1; r <= num_repetitions; ++r) {
      if (!present.contains({g, r})) missing.push_back({g, r});
    }
  }
  return missing;
}

inline std::string describe(std::span<const TrialKey> keys) {
  std::ostringstream os;
  for (std::size_t i = 0; i < keys.size(); ++i) {
    if (i) os << ", ";
    os << to_string(keys[i]);
  }
  return os.str();
}

}  // namespace cohnet
