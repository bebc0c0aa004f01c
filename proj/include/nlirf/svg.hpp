#pragma once

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "csv.hpp"
#include "error.hpp"
#include "inference.hpp"

namespace nlirf::svg {

struct Series {
  std::string label;
  std::string color = "#1f4e9c";
  std::vector<double> values;
  bool dashed = false;
};

struct Panel {
  std::string title;
  std::vector<Series> series;
};

namespace detail {

inline std::string escape(const std::string& s) {
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

inline std::string num(double v) {
  std::ostringstream o;
  o.setf(std::ios::fixed);
  o.precision(2);
  o << v;
  return o.str();
}

inline std::string header(double w, double h) {
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(w) + "\" height=\"" + num(h) +
         "\" viewBox=\"0 0 " + num(w) + " " + num(h) + "\" font-family=\"sans-serif\">\n";
}

}  // namespace detail

/// Grid of small line charts sharing the horizon axis, filled row by row.
inline std::string line_grid(const std::string& title, const std::vector<Panel>& panels, int rows = 5, int cols = 3) {
  if (rows < 1 || cols < 1) throw ConfigError("grid needs at least one row and column");
  const double pw = 240, ph = 150, pad = 30, top = 40;
  const double width = cols * pw + pad, height = top + rows * ph + pad;
  std::ostringstream o;
  o << detail::header(width, height);
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << detail::num(width / 2) << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">"
    << detail::escape(title) << "</text>\n";
  for (std::size_t i = 0; i < panels.size() && i < static_cast<std::size_t>(rows * cols); ++i) {
    const auto& p = panels[i];
    const double x0 = pad + static_cast<double>(i % static_cast<std::size_t>(cols)) * pw;
    const double y0 = top + static_cast<double>(i / static_cast<std::size_t>(cols)) * ph;
    const double iw = pw - 40, ih = ph - 45;
    double lo = 0.0, hi = 0.0;
    std::size_t n = 0;
    for (const auto& s : p.series) {
      n = std::max(n, s.values.size());
      for (double v : s.values)
        if (std::isfinite(v)) {
          lo = std::min(lo, v);
          hi = std::max(hi, v);
        }
    }
    if (hi - lo < 1e-12) {
      lo -= 1.0;
      hi += 1.0;
    }
    auto sx = [&](std::size_t h) { return x0 + 10 + (n > 1 ? iw * static_cast<double>(h) / static_cast<double>(n - 1) : 0.0); };
    auto sy = [&](double v) { return y0 + 25 + ih * (hi - v) / (hi - lo); };
    o << "<g>\n<text x=\"" << detail::num(x0 + 10 + iw / 2) << "\" y=\"" << detail::num(y0 + 16)
      << "\" text-anchor=\"middle\" font-size=\"11\">" << detail::escape(p.title) << "</text>\n";
    o << "<rect x=\"" << detail::num(x0 + 10) << "\" y=\"" << detail::num(y0 + 25) << "\" width=\"" << detail::num(iw)
      << "\" height=\"" << detail::num(ih) << "\" fill=\"none\" stroke=\"#999\"/>\n";
    o << "<line x1=\"" << detail::num(x0 + 10) << "\" x2=\"" << detail::num(x0 + 10 + iw) << "\" y1=\"" << detail::num(sy(0))
      << "\" y2=\"" << detail::num(sy(0)) << "\" stroke=\"#ccc\"/>\n";
    for (const auto& s : p.series) {
      o << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\""
        << (s.dashed ? " stroke-dasharray=\"4 3\"" : "") << " points=\"";
      for (std::size_t h = 0; h < s.values.size(); ++h)
        if (std::isfinite(s.values[h])) o << detail::num(sx(h)) << ',' << detail::num(sy(s.values[h])) << ' ';
      o << "\"><title>" << detail::escape(s.label) << "</title></polyline>\n";
    }
    o << "</g>\n";
  }
  o << "</svg>\n";
  return o.str();
}

/// Banded significance table: one row per (outcome, shock), one column per
/// horizon; white for none, yellow for weak, green for strong.
inline std::string band_table(const SignificanceTable& t) {
  const double cw = 22, rh = 18, left = 230, top = 50;
  const int nrows = static_cast<int>(t.outcomes.size()) * t.shocks;
  const double width = left + (t.max_horizon + 1) * cw + 20, height = top + nrows * rh + 20;
  std::ostringstream o;
  o << detail::header(width, height);
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"10\" y=\"20\" font-size=\"14\">" << detail::escape(t.title) << "</text>\n";
  for (int h = 0; h <= t.max_horizon; ++h)
    o << "<text x=\"" << detail::num(left + h * cw + cw / 2) << "\" y=\"" << detail::num(top - 6)
      << "\" text-anchor=\"middle\" font-size=\"10\">" << h << "</text>\n";
  int row = 0;
  for (int j = 0; j < static_cast<int>(t.outcomes.size()); ++j)
    for (int s = 0; s < t.shocks; ++s, ++row) {
      const double y = top + row * rh;
      o << "<text x=\"10\" y=\"" << detail::num(y + rh - 5) << "\" font-size=\"11\">"
        << detail::escape(t.outcomes[static_cast<std::size_t>(j)]) << " / " << shock_name(s) << "</text>\n";
      for (int h = 0; h <= t.max_horizon; ++h) {
        const char* fill = "#ffffff";
        switch (t.band(j, s, h)) {
          case Band::none: fill = "#ffffff"; break;
          case Band::weak: fill = "#f7e463"; break;
          case Band::strong: fill = "#5cb85c"; break;
        }
        o << "<rect x=\"" << detail::num(left + h * cw) << "\" y=\"" << detail::num(y) << "\" width=\"" << detail::num(cw)
          << "\" height=\"" << detail::num(rh) << "\" fill=\"" << fill << "\" stroke=\"#bbb\"/>\n";
      }
    }
  o << "</svg>\n";
  return o.str();
}

struct Histogram {
  double lo = 0.0;
  double width = 1.0;
  std::vector<int> counts;
};

/// Equal-width bins spanning [min, max].
inline Histogram histogram(const std::vector<double>& x, int bins = 30) {
  if (x.empty()) throw DataError("histogram of an empty sample");
  if (bins < 1) throw ConfigError("histogram needs at least one bin");
  const auto [mn, mx] = std::minmax_element(x.begin(), x.end());
  Histogram h;
  h.lo = *mn;
  h.width = *mx > *mn ? (*mx - *mn) / bins : 1.0;
  h.counts.assign(static_cast<std::size_t>(bins), 0);
  for (double v : x) {
    auto b = static_cast<int>(std::floor((v - h.lo) / h.width));
    ++h.counts[static_cast<std::size_t>(std::clamp(b, 0, bins - 1))];
  }
  return h;
}

inline std::string histogram_panels(const std::vector<std::string>& titles, const std::vector<Histogram>& hists) {
  const double pw = 300, ph = 220, pad = 20;
  const double width = pad + static_cast<double>(hists.size()) * pw, height = ph + 2 * pad;
  std::ostringstream o;
  o << detail::header(width, height);
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (std::size_t i = 0; i < hists.size(); ++i) {
    const auto& h = hists[i];
    const double x0 = pad + static_cast<double>(i) * pw, y0 = pad;
    const double iw = pw - 30, ih = ph - 40;
    const int peak = std::max(1, *std::max_element(h.counts.begin(), h.counts.end()));
    const double bw = iw / static_cast<double>(h.counts.size());
    o << "<text x=\"" << detail::num(x0 + iw / 2) << "\" y=\"" << detail::num(y0 + 12)
      << "\" text-anchor=\"middle\" font-size=\"12\">" << detail::escape(i < titles.size() ? titles[i] : "") << "</text>\n";
    for (std::size_t b = 0; b < h.counts.size(); ++b) {
      const double bh = ih * h.counts[b] / peak;
      o << "<rect x=\"" << detail::num(x0 + static_cast<double>(b) * bw) << "\" y=\"" << detail::num(y0 + 20 + ih - bh)
        << "\" width=\"" << detail::num(bw) << "\" height=\"" << detail::num(bh)
        << "\" fill=\"#4a78b5\" stroke=\"white\"/>\n";
    }
    o << "<text x=\"" << detail::num(x0) << "\" y=\"" << detail::num(y0 + ih + 34) << "\" font-size=\"10\">"
      << csv::format_double(h.lo) << "</text>\n";
    o << "<text x=\"" << detail::num(x0 + iw) << "\" y=\"" << detail::num(y0 + ih + 34)
      << "\" text-anchor=\"end\" font-size=\"10\">"
      << csv::format_double(h.lo + h.width * static_cast<double>(h.counts.size())) << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

}  // namespace nlirf::svg
