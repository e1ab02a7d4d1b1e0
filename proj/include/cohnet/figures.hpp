#pragma once

// Text-based SVG figures. Every number is printed with a fixed format so the
// same input always yields the same bytes.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>
#include <string>

#include "cohnet/coherence_matrix.hpp"
#include "cohnet/datamodel.hpp"
#include "cohnet/error.hpp"
#include "cohnet/eval.hpp"

namespace cohnet::figures {

struct Rgb {
  int r{0}, g{0}, b{0};
  bool operator==(const Rgb&) const = default;
};

inline std::string hex(Rgb c) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", c.r, c.g, c.b);
  return buf;
}

inline double unit_clamp(double v) { return std::isnan(v) ? 0.0 : std::clamp(v, 0.0, 1.0); }

// Viridis sampled at nine evenly spaced stops, linearly interpolated.
inline Rgb viridis(double t) {
  static constexpr std::array<Rgb, 9> stops{{{0x44, 0x01, 0x54},
                                             {0x48, 0x28, 0x78},
                                             {0x3e, 0x49, 0x89},
                                             {0x31, 0x68, 0x8e},
                                             {0x26, 0x82, 0x8e},
                                             {0x1f, 0x9e, 0x89},
                                             {0x35, 0xb7, 0x79},
                                             {0x6e, 0xce, 0x58},
                                             {0xfd, 0xe7, 0x25}}};
  t = unit_clamp(t) * 8.0;
  const auto k = std::min<std::size_t>(static_cast<std::size_t>(t), 7);
  const double f = t - static_cast<double>(k);
  auto mix = [f](int a, int b) { return static_cast<int>(std::lround(a + (b - a) * f)); };
  return {mix(stops[k].r, stops[k + 1].r), mix(stops[k].g, stops[k + 1].g), mix(stops[k].b, stops[k + 1].b)};
}

// Pure blue at 0 to pure red at 1.
inline Rgb blue_red(double t) {
  t = unit_clamp(t);
  return {static_cast<int>(std::lround(255.0 * t)), 0, static_cast<int>(std::lround(255.0 * (1.0 - t)))};
}

inline std::string num(double v, int precision = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, v);
  return buf;
}

inline std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

inline void open_svg(std::ostringstream& o, int w, int h, const std::string& title) {
  o << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
    << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\" viewBox=\"0 0 " << w
    << ' ' << h << "\" font-family=\"sans-serif\">\n"
    << "<title>" << xml_escape(title) << "</title>\n"
    << "<rect x=\"0\" y=\"0\" width=\"" << w << "\" height=\"" << h << "\" fill=\"#ffffff\"/>\n";
}

inline std::string render_heatmap(const CoherenceMatrix& m, const std::string& title = "Coherence") {
  constexpr int cell = 32, left = 60, top = 50;
  constexpr int grid = cell * static_cast<int>(kNumChannels);
  constexpr int bar_x = left + grid + 30, bar_w = 20, bar_steps = 64;
  std::ostringstream o;
  open_svg(o, bar_x + bar_w + 60, top + grid + 60, title);
  o << "<text x=\"" << left + grid / 2 << "\" y=\"28\" text-anchor=\"middle\" font-size=\"16\">" << xml_escape(title)
    << "</text>\n";
  for (std::size_t i = 0; i < kNumChannels; ++i) {
    for (std::size_t j = 0; j < kNumChannels; ++j) {
      const double v = m(i, j);
      o << "<rect class=\"cell\" data-row=\"" << i << "\" data-col=\"" << j << "\" data-value=\"" << num(v, 6)
        << "\" x=\"" << left + cell * static_cast<int>(j) << "\" y=\"" << top + cell * static_cast<int>(i)
        << "\" width=\"" << cell << "\" height=\"" << cell << "\" fill=\"" << hex(viridis(v)) << "\"/>\n";
    }
  }
  for (std::size_t k = 0; k < kNumChannels; ++k) {
    const int c = cell * static_cast<int>(k) + cell / 2;
    o << "<text class=\"label\" x=\"" << left - 6 << "\" y=\"" << top + c + 4
      << "\" text-anchor=\"end\" font-size=\"11\">ch" << k + 1 << "</text>\n";
    o << "<text class=\"label\" x=\"" << left + c << "\" y=\"" << top + grid + 16
      << "\" text-anchor=\"middle\" font-size=\"11\">ch" << k + 1 << "</text>\n";
  }
  // Color bar, 1 at the top.
  const double step_h = static_cast<double>(grid) / bar_steps;
  for (int s = 0; s < bar_steps; ++s) {
    const double v = 1.0 - (s + 0.5) / bar_steps;
    o << "<rect class=\"colorbar\" x=\"" << bar_x << "\" y=\"" << num(top + s * step_h) << "\" width=\"" << bar_w
      << "\" height=\"" << num(step_h + 0.01) << "\" fill=\"" << hex(viridis(v)) << "\"/>\n";
  }
  for (int t = 0; t <= 4; ++t) {
    const double v = t / 4.0;
    o << "<text class=\"tick\" x=\"" << bar_x + bar_w + 6 << "\" y=\"" << num(top + (1.0 - v) * grid + 4)
      << "\" font-size=\"11\">" << num(v) << "</text>\n";
  }
  o << "<text x=\"" << bar_x + bar_w / 2 << "\" y=\"" << top - 8
    << "\" text-anchor=\"middle\" font-size=\"11\">MSC</text>\n";
  o << "</svg>\n";
  return o.str();
}

inline std::string render_network(const CoherenceMatrix& m, const std::string& title = "Muscle network") {
  constexpr int size = 480;
  constexpr double cx = size / 2.0, cy = size / 2.0 + 10.0, radius = 180.0;
  std::array<double, kNumChannels> xs{}, ys{};
  for (std::size_t k = 0; k < kNumChannels; ++k) {
    // Node 1 at twelve o'clock, clockwise.
    const double a = 2.0 * std::numbers::pi * static_cast<double>(k) / kNumChannels - std::numbers::pi / 2.0;
    xs[k] = cx + radius * std::cos(a);
    ys[k] = cy + radius * std::sin(a);
  }
  std::ostringstream o;
  open_svg(o, size, size + 20, title);
  o << "<text x=\"" << size / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" << xml_escape(title)
    << "</text>\n";
  for (std::size_t i = 0; i < kNumChannels; ++i) {
    for (std::size_t j = i + 1; j < kNumChannels; ++j) {
      const double v = unit_clamp(m(i, j));
      o << "<line class=\"edge\" data-i=\"" << i << "\" data-j=\"" << j << "\" data-value=\"" << num(m(i, j), 6)
        << "\" x1=\"" << num(xs[i]) << "\" y1=\"" << num(ys[i]) << "\" x2=\"" << num(xs[j]) << "\" y2=\""
        << num(ys[j]) << "\" stroke=\"" << hex(blue_red(v)) << "\" stroke-width=\"" << num(0.5 + 3.5 * v) << "\"/>\n";
    }
  }
  for (std::size_t k = 0; k < kNumChannels; ++k) {
    o << "<circle class=\"node\" data-channel=\"" << k + 1 << "\" cx=\"" << num(xs[k]) << "\" cy=\"" << num(ys[k])
      << "\" r=\"14\" fill=\"#f0f0f0\" stroke=\"#333333\"/>\n";
    o << "<text x=\"" << num(xs[k]) << "\" y=\"" << num(ys[k] + 4) << "\" text-anchor=\"middle\" font-size=\"11\">"
      << k + 1 << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

// Cells shaded by count relative to the largest entry; each cell annotated
// with its mean count.
inline std::string render_confusion(const eval::Confusion& c, const std::string& title = "Mean confusion") {
  if (c.num_classes == 0 || c.counts.size() != c.num_classes * c.num_classes) {
    throw ConfigError("render_confusion: empty confusion matrix");
  }
  const int n = static_cast<int>(c.num_classes);
  constexpr int cell = 34, left = 70, top = 60;
  const int grid = cell * n;
  double peak = 0.0;
  for (double v : c.counts) peak = std::max(peak, v);
  std::ostringstream o;
  open_svg(o, left + grid + 30, top + grid + 60, title);
  o << "<text x=\"" << left + grid / 2 << "\" y=\"28\" text-anchor=\"middle\" font-size=\"16\">" << xml_escape(title)
    << "</text>\n";
  for (int t = 0; t < n; ++t) {
    for (int p = 0; p < n; ++p) {
      const double v = c.at(static_cast<std::size_t>(t), static_cast<std::size_t>(p));
      const double s = peak > 0 ? v / peak : 0.0;
      const int shade = static_cast<int>(std::lround(255.0 * (1.0 - s)));
      const Rgb fill{shade, shade, 255};
      const int x = left + cell * p, y = top + cell * t;
      o << "<rect class=\"cell\" data-row=\"" << t << "\" data-col=\"" << p << "\" x=\"" << x << "\" y=\"" << y
        << "\" width=\"" << cell << "\" height=\"" << cell << "\" fill=\"" << hex(fill) << "\"/>\n";
      o << "<text class=\"annotation\" data-row=\"" << t << "\" data-col=\"" << p << "\" x=\"" << x + cell / 2
        << "\" y=\"" << y + cell / 2 + 4 << "\" text-anchor=\"middle\" font-size=\"9\" fill=\""
        << (s > 0.6 ? "#ffffff" : "#000000") << "\">" << num(v) << "</text>\n";
    }
  }
  for (int k = 0; k < n; ++k) {
    o << "<text class=\"label\" x=\"" << left - 6 << "\" y=\"" << top + cell * k + cell / 2 + 4
      << "\" text-anchor=\"end\" font-size=\"11\">" << k + 1 << "</text>\n";
    o << "<text class=\"label\" x=\"" << left + cell * k + cell / 2 << "\" y=\"" << top + grid + 16
      << "\" text-anchor=\"middle\" font-size=\"11\">" << k + 1 << "</text>\n";
  }
  o << "<text x=\"" << left + grid / 2 << "\" y=\"" << top + grid + 40
    << "\" text-anchor=\"middle\" font-size=\"12\">predicted</text>\n";
  o << "<text x=\"16\" y=\"" << top + grid / 2 << "\" font-size=\"12\" transform=\"rotate(-90 16 " << top + grid / 2
    << ")\" text-anchor=\"middle\">true</text>\n";
  o << "</svg>\n";
  return o.str();
}

}  // namespace cohnet::figures
