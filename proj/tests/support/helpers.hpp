#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <unistd.h>
#include <numbers>
#include <string>
#include <vector>

#include "cohnet/datamodel.hpp"
#include "cohnet/random.hpp"

namespace testutil {

inline std::string data_path(const std::string& name) { return std::string(COHNET_TEST_DATA_DIR) + "/" + name; }

inline std::vector<double> white_noise(std::size_t n, std::uint64_t seed, double sd = 1.0) {
  cohnet::SplitMix64 rng(seed);
  std::vector<double> v(n);
  for (double& x : v) x = sd * rng.normal();
  return v;
}

inline std::vector<double> sine(std::size_t n, double f_hz, double fs, double amp = 1.0, double phase = 0.0) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) {
    v[i] = amp * std::sin(2.0 * std::numbers::pi * f_hz * static_cast<double>(i) / fs + phase);
  }
  return v;
}

inline cohnet::ChannelSignal signal(std::vector<double> v, double fs = cohnet::kDb2SampleRateHz) {
  return {std::move(v), fs};
}

// Labelled runs laid out back to back, each followed by `rest` rest samples.
struct Run {
  int gesture;
  int repetition;
  std::size_t length;
};

inline cohnet::SubjectDataset dataset_from_runs(const std::vector<Run>& runs, std::size_t rest = 0,
                                                std::uint64_t seed = 1) {
  cohnet::SubjectDataset ds;
  ds.subject_id = 1;
  ds.channels.resize(cohnet::kNumChannels);
  cohnet::SplitMix64 rng(seed);
  auto push = [&](int g, int r, std::size_t n) {
    for (std::size_t t = 0; t < n; ++t) {
      for (auto& ch : ds.channels) ch.samples.push_back(rng.normal());
      ds.stimulus.push_back(g);
      ds.repetition.push_back(r);
    }
  };
  push(0, 0, rest);
  for (const auto& run : runs) {
    push(run.gesture, run.repetition, run.length);
    push(0, 0, rest);
  }
  return ds;
}

// A full gesture x repetition grid of white-noise trials.
inline cohnet::SubjectDataset complete_dataset(int gestures, int reps, std::size_t length, std::size_t rest,
                                               std::uint64_t seed = 1) {
  std::vector<Run> runs;
  for (int g = 1; g <= gestures; ++g) {
    for (int r = 1; r <= reps; ++r) runs.push_back({g, r, length});
  }
  return dataset_from_runs(runs, rest, seed);
}

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& name) {
    path = std::filesystem::temp_directory_path() / ("cohnet_test_" + name + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  std::string str() const { return path.string(); }
};

}  // namespace testutil
