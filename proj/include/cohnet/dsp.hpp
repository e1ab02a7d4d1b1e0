#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "cohnet/datamodel.hpp"
#include "cohnet/error.hpp"

namespace cohnet::dsp {

using cplx = std::complex<double>;

// One second-order section, a0 normalized to 1. First-order sections use
// b2 = a2 = 0.
struct Biquad {
  double b0{1}, b1{0}, b2{0};
  double a1{0}, a2{0};

  int order() const { return (b2 != 0.0 || a2 != 0.0) ? 2 : 1; }

  cplx response(cplx z) const {
    const cplx zi = 1.0 / z;
    return (b0 + zi * (b1 + zi * b2)) / (1.0 + zi * (a1 + zi * a2));
  }

  std::array<cplx, 2> poles() const {
    // roots of z^2 + a1 z + a2
    const cplx disc = std::sqrt(cplx(a1 * a1 - 4.0 * a2, 0.0));
    return {(-a1 + disc) / 2.0, (-a1 - disc) / 2.0};
  }
};

enum class FilterKind { kBandpass, kNotch };

struct IirFilter {
  // Applied in vector order.
  std::vector<Biquad> sections;
  FilterKind kind{FilterKind::kBandpass};
  double low_hz{0}, high_hz{0};  // band edges; both equal f0 for a notch
  int prototype_order{0};
  double quality{0};
  double sample_rate_hz{kDb2SampleRateHz};

  int order() const {
    int n = 0;
    for (const auto& s : sections) n += s.order();
    return n;
  }

  cplx response(double f_hz) const {
    const cplx z = std::polar(1.0, 2.0 * std::numbers::pi * f_hz / sample_rate_hz);
    cplx h = 1.0;
    for (const auto& s : sections) h *= s.response(z);
    return h;
  }

  double magnitude(double f_hz) const { return std::abs(response(f_hz)); }

  double max_pole_radius() const {
    double r = 0.0;
    for (const auto& s : sections) {
      for (const auto& p : s.poles()) r = std::max(r, std::abs(p));
    }
    return r;
  }

  bool is_stable() const { return max_pole_radius() < 1.0 - 1e-9; }
};

// Poles of the normalized analog Butterworth lowpass prototype (cutoff 1
// rad/s, unit DC gain), left half plane.
inline std::vector<cplx> butterworth_prototype_poles(int order) {
  std::vector<cplx> poles;
  for (int m = -order + 1; m < order; m += 2) {
    poles.push_back(-std::polar(1.0, std::numbers::pi * m / (2.0 * order)));
  }
  return poles;
}

// H(j omega) of the analog prototype built from `poles` (all-pole, gain
// chosen so H(0) = 1).
inline cplx analog_prototype_response(std::span<const cplx> poles, double omega) {
  const cplx s(0.0, omega);
  cplx num = 1.0, den = 1.0;
  for (const auto& p : poles) {
    num *= -p;
    den *= (s - p);
  }
  return num / den;
}

// Digital Butterworth bandpass: analog prototype of `prototype_order`,
// lowpass-to-bandpass transform at prewarped edges, bilinear transform.
// Produces `prototype_order` biquads, each with numerator zeros at z = +1
// and z = -1, ordered by increasing pole radius.
inline IirFilter design_butterworth_bandpass(int prototype_order, double low_hz, double high_hz,
                                             double fs_hz) {
  if (prototype_order < 1) throw FilterDesignError("bandpass order must be >= 1");
  if (!(fs_hz > 0.0) || !(low_hz > 0.0) || !(low_hz < high_hz) || !(high_hz < fs_hz / 2.0)) {
    throw FilterDesignError("bandpass edges must satisfy 0 < low < high < fs/2 (got low=" +
                            std::to_string(low_hz) + ", high=" + std::to_string(high_hz) +
                            ", fs=" + std::to_string(fs_hz) + ")");
  }
  const double k2fs = 2.0 * fs_hz;
  const double wl = k2fs * std::tan(std::numbers::pi * low_hz / fs_hz);
  const double wh = k2fs * std::tan(std::numbers::pi * high_hz / fs_hz);
  const double bw = wh - wl;
  const double w0 = std::sqrt(wl * wh);

  std::vector<cplx> analog_poles;
  for (const auto& p : butterworth_prototype_poles(prototype_order)) {
    const cplx half = p * bw / 2.0;
    const cplx disc = std::sqrt(half * half - w0 * w0);
    analog_poles.push_back(half + disc);
    analog_poles.push_back(half - disc);
  }

  // Gain: bw^N from the band transform, then the bilinear factor for N zeros
  // at s = 0 and 2N poles.
  cplx gain = std::pow(bw * k2fs, prototype_order);
  std::vector<cplx> poles;
  for (const auto& p : analog_poles) {
    gain /= (k2fs - p);
    poles.push_back((k2fs + p) / (k2fs - p));
  }
  const double k = gain.real();

  std::vector<cplx> upper;
  std::vector<double> real;
  for (const auto& p : poles) {
    if (std::abs(p.imag()) <= 1e-12 * std::max(1.0, std::abs(p))) {
      real.push_back(p.real());
    } else if (p.imag() > 0) {
      upper.push_back(p);
    }
  }
  std::sort(real.begin(), real.end());

  std::vector<Biquad> sections;
  for (const auto& p : upper) {
    Biquad s;
    s.a1 = -2.0 * p.real();
    s.a2 = std::norm(p);
    sections.push_back(s);
  }
  for (std::size_t i = 0; i + 1 < real.size(); i += 2) {
    Biquad s;
    s.a1 = -(real[i] + real[i + 1]);
    s.a2 = real[i] * real[i + 1];
    sections.push_back(s);
  }
  if (sections.size() != static_cast<std::size_t>(prototype_order)) {
    throw FilterDesignError("bandpass pole pairing failed");
  }
  std::sort(sections.begin(), sections.end(),
            [](const Biquad& a, const Biquad& b) { return a.a2 < b.a2; });
  const double per_section = std::pow(std::abs(k), 1.0 / prototype_order);
  for (auto& s : sections) {
    s.b0 = per_section;
    s.b1 = 0.0;
    s.b2 = -per_section;
  }
  if (k < 0) {
    sections.front().b0 = -sections.front().b0;
    sections.front().b2 = -sections.front().b2;
  }

  IirFilter f;
  f.sections = std::move(sections);
  f.kind = FilterKind::kBandpass;
  f.low_hz = low_hz;
  f.high_hz = high_hz;
  f.prototype_order = prototype_order;
  f.sample_rate_hz = fs_hz;
  return f;
}

// Second-order IIR notch with zeros on the unit circle at f0 and -3 dB
// bandwidth f0/quality.
inline IirFilter design_notch(double f0_hz, double fs_hz, double quality) {
  if (!(fs_hz > 0.0) || !(f0_hz > 0.0) || !(f0_hz < fs_hz / 2.0)) {
    throw FilterDesignError("notch frequency must satisfy 0 < f0 < fs/2 (got f0=" +
                            std::to_string(f0_hz) + ")");
  }
  if (!(quality > 0.0)) throw FilterDesignError("notch quality factor must be positive");
  const double w0 = 2.0 * std::numbers::pi * f0_hz / fs_hz;
  const double beta = std::tan(w0 / quality / 2.0);
  const double g = 1.0 / (1.0 + beta);
  const double c = std::cos(w0);
  Biquad s;
  s.b0 = g;
  s.b1 = -2.0 * g * c;
  s.b2 = g;
  s.a1 = -2.0 * g * c;
  s.a2 = 2.0 * g - 1.0;

  IirFilter f;
  f.sections = {s};
  f.kind = FilterKind::kNotch;
  f.low_hz = f0_hz;
  f.high_hz = f0_hz;
  f.prototype_order = 2;
  f.quality = quality;
  f.sample_rate_hz = fs_hz;
  return f;
}

// Per-section DF-II transposed state giving a steady-state response to a
// unit step, scaled through the cascade.
inline std::vector<std::array<double, 2>> step_initial_state(const IirFilter& f) {
  std::vector<std::array<double, 2>> zi;
  double scale = 1.0;
  for (const auto& s : f.sections) {
    const double den = 1.0 + s.a1 + s.a2;
    const double dc = (s.b0 + s.b1 + s.b2) / den;
    const double z2 = s.b2 - s.a2 * dc;
    const double z1 = s.b1 - s.a1 * dc + z2;
    zi.push_back({z1 * scale, z2 * scale});
    scale *= dc;
  }
  return zi;
}

// Causal cascade, in place. `state` is consumed.
inline void sosfilt(const IirFilter& f, std::span<double> x, std::vector<std::array<double, 2>> state) {
  for (std::size_t k = 0; k < f.sections.size(); ++k) {
    const auto& s = f.sections[k];
    double z1 = state[k][0], z2 = state[k][1];
    for (double& v : x) {
      const double in = v;
      const double out = s.b0 * in + z1;
      z1 = s.b1 * in - s.a1 * out + z2;
      z2 = s.b2 * in - s.a2 * out;
      v = out;
    }
  }
}

inline std::size_t filtfilt_padding(const IirFilter& f) { return 3 * static_cast<std::size_t>(f.order()); }

// Zero-phase filtering: odd-reflection padding of 3x the filter order, forward
// pass, backward pass, padding removed.
inline std::vector<double> filtfilt(const IirFilter& f, std::span<const double> x) {
  const std::size_t pad = filtfilt_padding(f);
  const std::size_t n = x.size();
  if (n <= pad) {
    throw LengthError("filtfilt needs more than " + std::to_string(pad) + " samples, got " +
                      std::to_string(n));
  }
  std::vector<double> ext(n + 2 * pad);
  for (std::size_t i = 0; i < pad; ++i) {
    ext[i] = 2.0 * x[0] - x[pad - i];
    ext[pad + n + i] = 2.0 * x[n - 1] - x[n - 2 - i];
  }
  std::copy(x.begin(), x.end(), ext.begin() + static_cast<std::ptrdiff_t>(pad));

  const auto zi = step_initial_state(f);
  auto scaled = [&](double edge) {
    auto s = zi;
    for (auto& st : s) {
      st[0] *= edge;
      st[1] *= edge;
    }
    return s;
  };
  sosfilt(f, ext, scaled(ext.front()));
  std::reverse(ext.begin(), ext.end());
  sosfilt(f, ext, scaled(ext.front()));
  std::reverse(ext.begin(), ext.end());
  return {ext.begin() + static_cast<std::ptrdiff_t>(pad),
          ext.begin() + static_cast<std::ptrdiff_t>(pad + n)};
}

inline ChannelSignal filtfilt(const IirFilter& f, const ChannelSignal& x) {
  validate(x);
  if (x.sample_rate_hz != f.sample_rate_hz) {
    throw ConfigError("filter designed for " + std::to_string(f.sample_rate_hz) +
                      " Hz applied to a " + std::to_string(x.sample_rate_hz) + " Hz signal");
  }
  return {filtfilt(f, x.view()), x.sample_rate_hz};
}

// ---- preprocessing chain -------------------------------------------------

struct FilterParams {
  int bandpass_order{4};
  double low_hz{10.0};
  double high_hz{900.0};
  bool notch_enabled{true};
  double notch_hz{50.0};
  double notch_quality{30.0};
  double sample_rate_hz{kDb2SampleRateHz};

  bool operator==(const FilterParams&) const = default;
};

// Bandpass then notch, both zero-phase. Filters are designed once.
class Preprocessor {
 public:
  explicit Preprocessor(const FilterParams& p = {})
      : params_(p),
        bandpass_(design_butterworth_bandpass(p.bandpass_order, p.low_hz, p.high_hz, p.sample_rate_hz)) {
    if (p.notch_enabled) notch_ = design_notch(p.notch_hz, p.sample_rate_hz, p.notch_quality);
  }

  const IirFilter& bandpass() const { return bandpass_; }
  const IirFilter& notch() const { return notch_; }
  const FilterParams& params() const { return params_; }

  ChannelSignal apply(const ChannelSignal& x) const {
    auto y = filtfilt(bandpass_, x);
    if (params_.notch_enabled) y = filtfilt(notch_, y);
    return y;
  }

  TrialSegment apply(const TrialSegment& seg) const {
    TrialSegment out = seg;
    for (auto& ch : out.channels) ch = apply(ch);
    return out;
  }

 private:
  FilterParams params_;
  IirFilter bandpass_;
  IirFilter notch_;
};

// ---- z-score ----------------------------------------------------------------

struct ChannelStats {
  std::array<double, kNumChannels> mean{};
  std::array<double, kNumChannels> stddev{};

  bool operator==(const ChannelStats&) const = default;
};

// Population (divide-by-N) statistics over the concatenated training samples.
inline ChannelStats zscore_fit(std::span<const TrialSegment> train) {
  if (train.empty()) throw ConfigError("zscore_fit: empty training set");
  ChannelStats stats;
  for (std::size_t c = 0; c < kNumChannels; ++c) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& seg : train) {
      if (seg.channels.size() != kNumChannels) throw ShapeError("segment does not have 12 channels");
      for (double v : seg.channels[c].samples) sum += v;
      n += seg.channels[c].size();
    }
    if (n == 0) throw ConfigError("zscore_fit: training segments are empty");
    const double mean = sum / static_cast<double>(n);
    double ss = 0.0;
    for (const auto& seg : train) {
      for (double v : seg.channels[c].samples) ss += (v - mean) * (v - mean);
    }
    const double sd = std::sqrt(ss / static_cast<double>(n));
    if (!(sd > 0.0) || !std::isfinite(sd)) {
      throw DegenerateChannelError(c, "channel " + std::to_string(c + 1) +
                                          " has zero variance in the training set");
    }
    stats.mean[c] = mean;
    stats.stddev[c] = sd;
  }
  return stats;
}

inline TrialSegment zscore_apply(const ChannelStats& stats, const TrialSegment& seg) {
  if (seg.channels.size() != kNumChannels) throw ShapeError("segment does not have 12 channels");
  TrialSegment out = seg;
  for (std::size_t c = 0; c < kNumChannels; ++c) {
    if (!(stats.stddev[c] > 0.0)) {
      throw DegenerateChannelError(c, "channel " + std::to_string(c + 1) + " has nonpositive std");
    }
    for (double& v : out.channels[c].samples) v = (v - stats.mean[c]) / stats.stddev[c];
  }
  return out;
}

}  // namespace cohnet::dsp
