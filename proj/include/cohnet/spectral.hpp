#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "cohnet/coherence_matrix.hpp"
#include "cohnet/datamodel.hpp"
#include "cohnet/error.hpp"
#include "cohnet/fft.hpp"

namespace cohnet::spectral {

using cplx = std::complex<double>;

enum class Taper { kHann, kHamming, kRectangular };

inline const char* taper_name(Taper t) {
  switch (t) {
    case Taper::kHann: return "hann";
    case Taper::kHamming: return "hamming";
    case Taper::kRectangular: return "rectangular";
  }
  return "hann";
}

inline Taper parse_taper(const std::string& s) {
  if (s == "hann") return Taper::kHann;
  if (s == "hamming") return Taper::kHamming;
  if (s == "rectangular" || s == "boxcar") return Taper::kRectangular;
  throw ConfigError("unknown taper '" + s + "' (expected hann, hamming or rectangular)");
}

// Periodic (DFT-even) windows.
inline std::vector<double> make_window(Taper taper, std::size_t n) {
  std::vector<double> w(n, 1.0);
  const double step = 2.0 * std::numbers::pi / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double c = std::cos(step * static_cast<double>(i));
    switch (taper) {
      case Taper::kHann: w[i] = 0.5 - 0.5 * c; break;
      case Taper::kHamming: w[i] = 0.54 - 0.46 * c; break;
      case Taper::kRectangular: break;
    }
  }
  return w;
}

struct WelchParams {
  std::size_t window_length{600};
  double overlap_fraction{0.5};
  std::size_t nfft{0};  // 0 means nfft = window_length
  Taper taper{Taper::kHann};

  std::size_t fft_length() const { return nfft == 0 ? window_length : nfft; }
  std::size_t overlap() const {
    return static_cast<std::size_t>(std::floor(overlap_fraction * static_cast<double>(window_length)));
  }
  std::size_t hop() const { return window_length - overlap(); }
  std::size_t num_bins() const { return fft_length() / 2 + 1; }
  // Segments that fit entirely; a trailing partial segment is dropped.
  std::size_t num_segments(std::size_t n) const {
    return n < window_length ? 0 : (n - window_length) / hop() + 1;
  }

  bool operator==(const WelchParams&) const = default;
};

inline void validate(const WelchParams& p) {
  if (p.window_length < 2) throw ConfigError("welch: window length must be >= 2");
  if (!(p.overlap_fraction >= 0.0) || !(p.overlap_fraction < 1.0)) {
    throw ConfigError("welch: overlap fraction must be in [0, 1)");
  }
  if (p.nfft != 0 && p.nfft < p.window_length) {
    throw ConfigError("welch: nfft must be >= window length");
  }
}

struct Spectrum {
  std::vector<double> frequencies;
  std::vector<double> values;
};

struct CrossSpectrum {
  std::vector<double> frequencies;
  std::vector<cplx> values;
};

struct CoherenceSpectrum {
  std::vector<double> frequencies;
  std::vector<double> values;

  double mean() const {
    double s = 0.0;
    for (double v : values) s += v;
    return values.empty() ? 0.0 : s / static_cast<double>(values.size());
  }
};

struct WelchResult {
  Spectrum pxx;
  Spectrum pyy;
  CrossSpectrum pxy;
  std::size_t segments{0};
};

// Shared machinery: windowed one-sided FFTs of every Welch segment, plus the
// density scaling. Everything downstream (welch, msc, coherence_matrix)
// goes through the same accumulation so results agree bit for bit.
class Estimator {
 public:
  Estimator(const WelchParams& params, double sample_rate_hz)
      : params_(params), fs_(sample_rate_hz), plan_(params.fft_length()) {
    validate(params_);
    if (!(fs_ > 0.0)) throw ConfigError("welch: sample rate must be positive");
    window_ = make_window(params_.taper, params_.window_length);
    double power = 0.0;
    for (double w : window_) power += w * w;
    const std::size_t nb = params_.num_bins();
    const std::size_t nfft = params_.fft_length();
    scale_.assign(nb, 1.0 / (fs_ * power));
    for (std::size_t k = 1; k < nb; ++k) {
      if (!(nfft % 2 == 0 && k == nb - 1)) scale_[k] *= 2.0;
    }
    freqs_.resize(nb);
    for (std::size_t k = 0; k < nb; ++k) {
      freqs_[k] = static_cast<double>(k) * fs_ / static_cast<double>(nfft);
    }
  }

  const WelchParams& params() const { return params_; }
  const std::vector<double>& frequencies() const { return freqs_; }
  double sample_rate_hz() const { return fs_; }

  void check_length(std::size_t n) const {
    const std::size_t min_len = 2 * params_.window_length;
    if (n < min_len) {
      throw LengthError("welch: signal of " + std::to_string(n) + " samples is shorter than " +
                        std::to_string(min_len) + " (two windows)");
    }
  }

  // segments x bins, row-major
  std::vector<cplx> segment_spectra(std::span<const double> x) const {
    const std::size_t nseg = params_.num_segments(x.size());
    const std::size_t nb = params_.num_bins();
    const std::size_t nfft = params_.fft_length();
    const std::size_t win = params_.window_length;
    std::vector<cplx> out(nseg * nb);
    std::vector<cplx> buf(nfft), spec(nfft);
    for (std::size_t s = 0; s < nseg; ++s) {
      const std::size_t start = s * params_.hop();
      double mean = 0.0;
      for (std::size_t i = 0; i < win; ++i) mean += x[start + i];
      mean /= static_cast<double>(win);
      std::fill(buf.begin(), buf.end(), cplx(0.0, 0.0));
      for (std::size_t i = 0; i < win; ++i) buf[i] = (x[start + i] - mean) * window_[i];
      plan_.forward(buf, spec);
      std::copy(spec.begin(), spec.begin() + static_cast<std::ptrdiff_t>(nb),
                out.begin() + static_cast<std::ptrdiff_t>(s * nb));
    }
    return out;
  }

  std::vector<double> auto_density(std::span<const cplx> spectra) const {
    const std::size_t nb = params_.num_bins();
    const std::size_t nseg = spectra.size() / nb;
    std::vector<double> p(nb, 0.0);
    for (std::size_t s = 0; s < nseg; ++s) {
      for (std::size_t k = 0; k < nb; ++k) p[k] += std::norm(spectra[s * nb + k]);
    }
    for (std::size_t k = 0; k < nb; ++k) p[k] = p[k] / static_cast<double>(nseg) * scale_[k];
    return p;
  }

  // conj(X) * Y averaged over segments
  std::vector<cplx> cross_density(std::span<const cplx> sx, std::span<const cplx> sy) const {
    const std::size_t nb = params_.num_bins();
    const std::size_t nseg = sx.size() / nb;
    std::vector<cplx> p(nb, cplx(0.0, 0.0));
    for (std::size_t s = 0; s < nseg; ++s) {
      for (std::size_t k = 0; k < nb; ++k) p[k] += std::conj(sx[s * nb + k]) * sy[s * nb + k];
    }
    for (std::size_t k = 0; k < nb; ++k) p[k] = p[k] / static_cast<double>(nseg) * scale_[k];
    return p;
  }

  static std::vector<double> coherence(std::span<const double> pxx, std::span<const double> pyy,
                                       std::span<const cplx> pxy) {
    std::vector<double> c(pxx.size());
    for (std::size_t k = 0; k < c.size(); ++k) {
      const double den = pxx[k] * pyy[k];
      c[k] = den > 0.0 ? std::norm(pxy[k]) / den : 0.0;
    }
    return c;
  }

 private:
  WelchParams params_;
  double fs_;
  FftPlan plan_;
  std::vector<double> window_;
  std::vector<double> scale_;
  std::vector<double> freqs_;
};

namespace detail {

inline void check_pair(const ChannelSignal& x, const ChannelSignal& y) {
  validate(x);
  validate(y);
  if (x.size() != y.size()) {
    throw LengthError("welch: signals differ in length (" + std::to_string(x.size()) + " vs " +
                      std::to_string(y.size()) + ")");
  }
  if (x.sample_rate_hz != y.sample_rate_hz) throw ConfigError("welch: signals differ in sample rate");
}

}  // namespace detail

inline WelchResult welch(const ChannelSignal& x, const ChannelSignal& y, const WelchParams& params = {}) {
  detail::check_pair(x, y);
  const Estimator est(params, x.sample_rate_hz);
  est.check_length(x.size());
  const auto sx = est.segment_spectra(x.view());
  const auto sy = est.segment_spectra(y.view());
  WelchResult r;
  r.segments = params.num_segments(x.size());
  r.pxx = {est.frequencies(), est.auto_density(sx)};
  r.pyy = {est.frequencies(), est.auto_density(sy)};
  r.pxy = {est.frequencies(), est.cross_density(sx, sy)};
  return r;
}

inline CoherenceSpectrum msc(const ChannelSignal& x, const ChannelSignal& y, const WelchParams& params = {}) {
  const auto w = welch(x, y, params);
  return {w.pxx.frequencies, Estimator::coherence(w.pxx.values, w.pyy.values, w.pxy.values)};
}

// Band-averaged MSC for all 66 channel pairs of one trial. Each channel's
// segment spectra are computed once and reused across its 11 pairings.
inline CoherenceMatrix coherence_matrix(const TrialSegment& seg, const WelchParams& params = {}) {
  if (seg.channels.size() != kNumChannels) throw ShapeError("segment does not have 12 channels");
  const std::size_t n = seg.channels.front().size();
  const double fs = seg.channels.front().sample_rate_hz;
  for (const auto& ch : seg.channels) detail::check_pair(seg.channels.front(), ch);
  const Estimator est(params, fs);
  est.check_length(n);

  std::vector<std::vector<cplx>> spectra(kNumChannels);
  std::vector<std::vector<double>> autos(kNumChannels);
  for (std::size_t c = 0; c < kNumChannels; ++c) {
    spectra[c] = est.segment_spectra(seg.channels[c].view());
    autos[c] = est.auto_density(spectra[c]);
  }
  CoherenceMatrix m;
  m.gesture = seg.gesture;
  m.repetition = seg.repetition;
  for (std::size_t i = 0; i < kNumChannels; ++i) {
    for (std::size_t j = i + 1; j < kNumChannels; ++j) {
      const auto cross = est.cross_density(spectra[i], spectra[j]);
      const CoherenceSpectrum c{est.frequencies(), Estimator::coherence(autos[i], autos[j], cross)};
      const double v = c.mean();
      m(i, j) = v;
      m(j, i) = v;
    }
  }
  return m;
}

}  // namespace cohnet::spectral
