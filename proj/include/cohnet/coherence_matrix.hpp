#pragma once

#include <array>
#include <cstddef>

#include "cohnet/datamodel.hpp"

namespace cohnet {

// 12x12 functional-network adjacency for one trial: band-averaged MSC per
// channel pair, symmetric, diagonal zero. Row-major storage.
struct CoherenceMatrix {
  std::array<double, kNumChannels * kNumChannels> values{};
  int gesture{0};
  int repetition{0};

  double& operator()(std::size_t i, std::size_t j) { return values[i * kNumChannels + j]; }
  double operator()(std::size_t i, std::size_t j) const { return values[i * kNumChannels + j]; }

  bool operator==(const CoherenceMatrix&) const = default;
};

}  // namespace cohnet
