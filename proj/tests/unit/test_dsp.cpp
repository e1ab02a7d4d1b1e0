#include <cmath>

#include "catch_amalgamated.hpp"
#include "cohnet/dsp.hpp"
#include "support/helpers.hpp"

using namespace cohnet;
using Catch::Approx;

namespace {

double rms(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s / static_cast<double>(v.size()));
}

double db(double gain) { return 20.0 * std::log10(gain); }

const dsp::IirFilter& default_bandpass() {
  static const auto f = dsp::design_butterworth_bandpass(4, 10.0, 900.0, 2000.0);
  return f;
}

}  // namespace

TEST_CASE("bandpass edges are -3 dB", "[dsp][bandpass]") {
  const auto& f = default_bandpass();
  CHECK(f.magnitude(10.0) == Approx(1.0 / std::sqrt(2.0)).epsilon(0.005));
  CHECK(f.magnitude(900.0) == Approx(1.0 / std::sqrt(2.0)).epsilon(0.005));
  CHECK(std::abs(db(f.magnitude(10.0)) + 3.0103) <= 0.05);
  CHECK(std::abs(db(f.magnitude(900.0)) + 3.0103) <= 0.05);
}

TEST_CASE("bandpass structural zeros and passband", "[dsp][bandpass]") {
  const auto& f = default_bandpass();
  CHECK(f.magnitude(0.0) <= 1e-6);
  CHECK(f.magnitude(1000.0) <= 1e-6);
  CHECK(f.magnitude(std::sqrt(10.0 * 900.0)) >= 0.999);
  // dense scan: peak gain is 1 and the passband is the geometric-centre region
  double peak = 0.0;
  for (double hz = 0.5; hz < 1000.0; hz += 0.5) peak = std::max(peak, f.magnitude(hz));
  CHECK(peak <= 1.0 + 1e-9);
  CHECK(peak >= 0.999);
}

TEST_CASE("bandpass structure: 4 biquads, 8 poles, zeros at z = +-1", "[dsp][bandpass]") {
  const auto& f = default_bandpass();
  REQUIRE(f.sections.size() == 4);
  CHECK(f.order() == 8);
  CHECK(f.kind == dsp::FilterKind::kBandpass);
  CHECK(f.prototype_order == 4);
  double last = 0.0;
  for (const auto& s : f.sections) {
    CHECK(s.b1 == 0.0);
    CHECK(s.b2 == -s.b0);
    CHECK(s.a2 >= last);  // ordered by pole radius
    last = s.a2;
  }
}

TEST_CASE("digital bandpass matches the analytic Butterworth magnitude", "[dsp][bandpass]") {
  // |H|^2 = 1 / (1 + ((W^2 - W0^2) / (W B))^(2N)) with W = 2 fs tan(pi f / fs)
  for (int order : {1, 2, 3, 4, 6}) {
    for (auto [lo, hi] : {std::pair{10.0, 900.0}, std::pair{20.0, 450.0}, std::pair{200.0, 300.0}}) {
      const double fs = 2000.0;
      const auto f = dsp::design_butterworth_bandpass(order, lo, hi, fs);
      const double wl = 2 * fs * std::tan(std::numbers::pi * lo / fs);
      const double wh = 2 * fs * std::tan(std::numbers::pi * hi / fs);
      double worst = 0.0;
      for (double hz = 1.0; hz < 1000.0; hz += 1.0) {
        const double w = 2 * fs * std::tan(std::numbers::pi * hz / fs);
        const double ratio = (w * w - wl * wh) / (w * (wh - wl));
        const double expect = 1.0 / std::sqrt(1.0 + std::pow(ratio * ratio, order));
        worst = std::max(worst, std::abs(f.magnitude(hz) - expect));
      }
      INFO("order " << order << " band " << lo << "-" << hi);
      CHECK(worst <= 1e-9);
      CHECK(f.is_stable());
      CHECK(f.order() == 2 * order);
    }
  }
}

TEST_CASE("analog prototype matches 1/sqrt(1 + w^2N)", "[dsp][prototype]") {
  for (int n = 1; n <= 8; ++n) {
    const auto poles = dsp::butterworth_prototype_poles(n);
    REQUIRE(poles.size() == static_cast<std::size_t>(n));
    for (const auto& p : poles) {
      CHECK(p.real() < 0.0);
      CHECK(std::abs(p) == Approx(1.0).epsilon(1e-12));
    }
    for (double w = 0.0; w <= 10.0; w += 0.05) {
      const double expect = 1.0 / std::sqrt(1.0 + std::pow(w, 2 * n));
      CHECK(std::abs(std::abs(dsp::analog_prototype_response(poles, w)) - expect) <= 1e-6);
    }
  }
}

TEST_CASE("filter design rejects bad edges", "[dsp]") {
  CHECK_THROWS_AS(dsp::design_butterworth_bandpass(4, 0.0, 900.0, 2000.0), FilterDesignError);
  CHECK_THROWS_AS(dsp::design_butterworth_bandpass(4, 500.0, 400.0, 2000.0), FilterDesignError);
  CHECK_THROWS_AS(dsp::design_butterworth_bandpass(4, 10.0, 1000.0, 2000.0), FilterDesignError);
  CHECK_THROWS_AS(dsp::design_butterworth_bandpass(0, 10.0, 900.0, 2000.0), FilterDesignError);
  CHECK_THROWS_AS(dsp::design_notch(0.0, 2000.0, 30.0), FilterDesignError);
  CHECK_THROWS_AS(dsp::design_notch(1000.0, 2000.0, 30.0), FilterDesignError);
  CHECK_THROWS_AS(dsp::design_notch(50.0, 2000.0, 0.0), FilterDesignError);
  CHECK_THROWS_AS(dsp::Preprocessor(dsp::FilterParams{4, 10, 1200, true, 50, 30, 2000}), ConfigError);
}

TEST_CASE("notch filter", "[dsp][notch]") {
  const auto f = dsp::design_notch(50.0, 2000.0, 30.0);
  REQUIRE(f.sections.size() == 1);
  CHECK(f.magnitude(50.0) <= 1e-3);
  CHECK(f.magnitude(0.0) == Approx(1.0).epsilon(0.01));
  CHECK(f.magnitude(1000.0) == Approx(1.0).epsilon(0.01));
  CHECK(f.is_stable());

  // -3 dB points by bisection on either side of f0
  auto edge = [&](double inside, double outside) {
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (inside + outside);
      (f.magnitude(mid) < 1.0 / std::sqrt(2.0) ? inside : outside) = mid;
    }
    return 0.5 * (inside + outside);
  };
  for (double q : {5.0, 30.0, 60.0}) {
    const auto g = dsp::design_notch(50.0, 2000.0, q);
    auto e = [&](double in, double out) {
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (in + out);
        (g.magnitude(mid) < 1.0 / std::sqrt(2.0) ? in : out) = mid;
      }
      return 0.5 * (in + out);
    };
    const double bw = e(50.0, 100.0) - e(50.0, 1.0);
    INFO("Q = " << q);
    CHECK(bw == Approx(50.0 / q).epsilon(0.05));
  }
  CHECK(edge(50.0, 100.0) > 50.0);
}

TEST_CASE("all default filters are stable", "[dsp]") {
  const dsp::Preprocessor pre;
  CHECK(pre.bandpass().is_stable());
  CHECK(pre.notch().is_stable());
  CHECK(pre.bandpass().max_pole_radius() < 1.0 - 1e-9);
  for (int order = 1; order <= 8; ++order) {
    CHECK(dsp::design_butterworth_bandpass(order, 10.0, 900.0, 2000.0).is_stable());
    CHECK(dsp::design_butterworth_bandpass(order, 1.0, 999.0, 2000.0).is_stable());
  }
}

TEST_CASE("filtfilt preserves phase of an in-band tone", "[dsp][filtfilt]") {
  const auto x = testutil::sine(10000, 100.0, 2000.0);
  const auto y = dsp::filtfilt(default_bandpass(), x);
  REQUIRE(y.size() == x.size());
  int best_lag = 999;
  double best = -1e300;
  for (int lag = -15; lag <= 15; ++lag) {
    double s = 0.0;
    for (std::size_t i = 2000; i < 8000; ++i) s += y[i] * x[static_cast<std::size_t>(static_cast<long>(i) + lag)];
    if (s > best) {
      best = s;
      best_lag = lag;
    }
  }
  CHECK(best_lag == 0);
  // and the tone passes essentially unchanged
  double err = 0.0;
  for (std::size_t i = 2000; i < 8000; ++i) err = std::max(err, std::abs(y[i] - x[i]));
  CHECK(err < 1e-3);
}

TEST_CASE("filtfilt squares the magnitude response", "[dsp][filtfilt]") {
  // Off-centre tones: at exactly f0 the attenuation sinks into rounding noise.
  const auto notch = dsp::design_notch(50.0, 2000.0, 30.0);
  for (double hz : {49.0, 49.5, 50.5, 51.0}) {
    const auto x = testutil::sine(60000, hz, 2000.0);
    auto once = x;
    dsp::sosfilt(notch, once, std::vector<std::array<double, 2>>(1, {0.0, 0.0}));
    const auto twice = dsp::filtfilt(notch, x);
    const std::span<const double> in(x.data() + 20000, 20000);
    const double single_db = db(rms(std::span<const double>(once.data() + 20000, 20000)) / rms(in));
    const double double_db = db(rms(std::span<const double>(twice.data() + 20000, 20000)) / rms(in));
    INFO(hz << " Hz: single " << single_db << " dB, double " << double_db << " dB");
    CHECK(single_db < -1.0);
    CHECK(double_db / single_db == Approx(2.0).epsilon(0.005));
    CHECK(single_db == Approx(db(notch.magnitude(hz))).margin(0.01));
  }
  // at f0 the double pass is at least as deep as the single pass
  const auto x = testutil::sine(60000, 50.0, 2000.0);
  const auto y = dsp::filtfilt(notch, x);
  CHECK(rms(std::span<const double>(y.data() + 20000, 20000)) <= 1e-6);
}

TEST_CASE("filtfilt of a constant through the bandpass is ~0", "[dsp][filtfilt]") {
  for (double c : {1.0, -250.0, 3e4}) {
    const std::vector<double> x(5000, c);
    const auto y = dsp::filtfilt(default_bandpass(), x);
    double worst = 0.0;
    for (double v : y) worst = std::max(worst, std::abs(v));
    CHECK(worst <= 1e-6 * std::abs(c));
  }
}

TEST_CASE("filtfilt length requirement", "[dsp][filtfilt]") {
  const auto& f = default_bandpass();
  CHECK(dsp::filtfilt_padding(f) == 24);
  CHECK_THROWS_AS(dsp::filtfilt(f, std::vector<double>(24, 1.0)), LengthError);
  CHECK(dsp::filtfilt(f, std::vector<double>(25, 1.0)).size() == 25);
  CHECK_THROWS_AS(dsp::filtfilt(f, testutil::signal(std::vector<double>(100, 0.0), 1000.0)), ConfigError);
}

TEST_CASE("filtfilt time-reversal symmetry away from the edges", "[dsp][filtfilt][property]") {
  // Exact in the interior; edge transients from the finite padding decay
  // with the slowest pole (notch radius 0.9974, ~380-sample time constant).
  const dsp::Preprocessor pre;
  struct Case {
    const dsp::IirFilter* f;
    std::size_t margin;
  };
  for (const auto& c : {Case{&pre.bandpass(), 2000}, Case{&pre.notch(), 8000}}) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const std::size_t n = 20000;
      const auto x = testutil::white_noise(n, seed);
      const std::vector<double> xr(x.rbegin(), x.rend());
      const auto y = dsp::filtfilt(*c.f, x);
      const auto yr = dsp::filtfilt(*c.f, xr);
      double worst = 0.0;
      for (std::size_t i = c.margin; i < n - c.margin; ++i) worst = std::max(worst, std::abs(y[i] - yr[n - 1 - i]));
      CHECK(worst <= 1e-9);
    }
  }
}

TEST_CASE("preprocessing is deterministic and order is bandpass then notch", "[dsp]") {
  const dsp::Preprocessor pre;
  const auto x = testutil::signal(testutil::white_noise(6000, 3));
  const auto a = pre.apply(x);
  const auto b = pre.apply(x);
  CHECK(a.samples == b.samples);
  const auto manual = dsp::filtfilt(pre.notch(), dsp::filtfilt(pre.bandpass(), x));
  CHECK(a.samples == manual.samples);
  dsp::FilterParams p;
  p.notch_enabled = false;
  CHECK(dsp::Preprocessor(p).apply(x).samples == dsp::filtfilt(pre.bandpass(), x).samples);
}

namespace {

TrialSegment segment_with(std::vector<std::vector<double>> per_channel, int rep = 1) {
  TrialSegment s;
  s.gesture = 1;
  s.repetition = rep;
  for (auto& v : per_channel) s.channels.push_back(testutil::signal(std::move(v)));
  s.end = s.channels.front().size();
  return s;
}

TrialSegment random_segment(std::uint64_t seed, std::size_t n, double shift, double scale) {
  std::vector<std::vector<double>> ch;
  for (std::size_t c = 0; c < kNumChannels; ++c) {
    auto v = testutil::white_noise(n, seed * 100 + c, scale * (1.0 + static_cast<double>(c)));
    for (double& x : v) x += shift * static_cast<double>(c);
    ch.push_back(std::move(v));
  }
  return segment_with(std::move(ch));
}

}  // namespace

TEST_CASE("z-score by hand", "[dsp][zscore]") {
  std::vector<std::vector<double>> ch(kNumChannels, std::vector<double>{1.0, 3.0});
  const std::vector<TrialSegment> train{segment_with(ch)};
  const auto stats = dsp::zscore_fit(train);
  for (std::size_t c = 0; c < kNumChannels; ++c) {
    CHECK(stats.mean[c] == 2.0);
    CHECK(stats.stddev[c] == 1.0);
  }
  const auto z = dsp::zscore_apply(stats, train[0]);
  CHECK(z.channels[0].samples == std::vector<double>{-1.0, 1.0});
}

TEST_CASE("z-score statistics come from training segments only", "[dsp][zscore]") {
  std::vector<TrialSegment> train{random_segment(1, 500, 3.0, 2.0), random_segment(2, 700, 3.0, 2.0)};
  const auto s1 = dsp::zscore_fit(train);
  auto test_seg = random_segment(3, 600, 0.0, 1.0);
  for (auto& ch : test_seg.channels) {
    for (double& v : ch.samples) v *= 1000.0;
  }
  const auto s2 = dsp::zscore_fit(train);
  CHECK(s1 == s2);
}

TEST_CASE("z-scored training concatenation has mean 0 and std 1", "[dsp][zscore][property]") {
  SplitMix64 rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<TrialSegment> train;
    const std::size_t k = 1 + rng.below(4);
    for (std::size_t i = 0; i < k; ++i) {
      train.push_back(random_segment(rng.next(), 200 + rng.below(400), rng.uniform(-5, 5), rng.uniform(0.1, 10)));
    }
    const auto stats = dsp::zscore_fit(train);
    std::vector<TrialSegment> normed;
    for (const auto& s : train) normed.push_back(dsp::zscore_apply(stats, s));
    const auto check = dsp::zscore_fit(normed);
    for (std::size_t c = 0; c < kNumChannels; ++c) {
      CHECK(std::abs(check.mean[c]) <= 1e-12);
      CHECK(std::abs(check.stddev[c] - 1.0) <= 1e-12);
    }
    // refitting on normalised data and applying again is the identity
    for (std::size_t i = 0; i < normed.size(); ++i) {
      const auto again = dsp::zscore_apply(check, normed[i]);
      for (std::size_t c = 0; c < kNumChannels; ++c) {
        for (std::size_t t = 0; t < again.channels[c].size(); ++t) {
          REQUIRE(std::abs(again.channels[c].samples[t] - normed[i].channels[c].samples[t]) <= 1e-12);
        }
      }
    }
  }
}

TEST_CASE("constant shift moves only the mean", "[dsp][zscore]") {
  const std::vector<TrialSegment> train{random_segment(9, 800, 0.0, 1.0)};
  auto shifted = train;
  for (auto& ch : shifted[0].channels) {
    for (double& v : ch.samples) v += 7.5;
  }
  const auto a = dsp::zscore_fit(train);
  const auto b = dsp::zscore_fit(shifted);
  for (std::size_t c = 0; c < kNumChannels; ++c) {
    CHECK(b.mean[c] == Approx(a.mean[c] + 7.5).epsilon(1e-12));
    CHECK(b.stddev[c] == Approx(a.stddev[c]).epsilon(1e-9));
  }
}

TEST_CASE("zero-variance channel is a named error", "[dsp][zscore]") {
  auto seg = random_segment(4, 300, 0.0, 1.0);
  seg.channels[6].samples.assign(300, 2.0);
  const std::vector<TrialSegment> train{seg};
  try {
    dsp::zscore_fit(train);
    FAIL("expected DegenerateChannelError");
  } catch (const DegenerateChannelError& e) {
    CHECK(e.channel() == 6);
    CHECK_THAT(std::string(e.what()), Catch::Matchers::ContainsSubstring("channel 7"));
  }
  CHECK_THROWS_AS(dsp::zscore_fit(std::vector<TrialSegment>{}), ConfigError);
}
