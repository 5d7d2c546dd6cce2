// Copyright 2026 The CLPD Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "clpd/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace clpd::svg {
namespace {

constexpr const char* kPalette[] = {"#4e79a7", "#f28e2b", "#59a14f", "#e15759", "#76b7b2", "#edc948", "#b07aa1"};
constexpr int kPaletteSize = 7;

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", x);
  return buf;
}

std::string tick(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

// Axis range rounded out to a "nice" step, always including zero for bars.
struct Axis {
  double lo = 0.0, hi = 1.0, step = 0.2;
};

Axis nice_axis(double lo, double hi) {
  if (!(hi > lo)) hi = lo + 1.0;
  const double raw = (hi - lo) / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    step = m * mag;
    if (step >= raw) break;
  }
  return {std::floor(lo / step) * step, std::ceil(hi / step) * step, step};
}

struct Frame {
  double left = 70, top = 40, width = 0, height = 260;
};

void header(std::ostringstream& o, double w, double h, const std::string& title) {
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(w) << "\" height=\"" << num(h)
    << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << num(w / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << escape(title)
    << "</text>\n";
}

void y_axis(std::ostringstream& o, const Frame& f, const Axis& a, const std::string& label) {
  auto y = [&](double v) { return f.top + f.height * (1.0 - (v - a.lo) / (a.hi - a.lo)); };
  for (double v = a.lo; v <= a.hi + a.step * 1e-6; v += a.step) {
    o << "<line x1=\"" << num(f.left) << "\" x2=\"" << num(f.left + f.width) << "\" y1=\"" << num(y(v))
      << "\" y2=\"" << num(y(v)) << "\" stroke=\"#ddd\"/>\n";
    o << "<text x=\"" << num(f.left - 6) << "\" y=\"" << num(y(v) + 4) << "\" text-anchor=\"end\">" << tick(v)
      << "</text>\n";
  }
  o << "<line x1=\"" << num(f.left) << "\" x2=\"" << num(f.left) << "\" y1=\"" << num(f.top) << "\" y2=\""
    << num(f.top + f.height) << "\" stroke=\"black\"/>\n";
  o << "<text transform=\"translate(16," << num(f.top + f.height / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
    << escape(label) << "</text>\n";
}

void footer_lines(std::ostringstream& o, double y0, const std::vector<std::string>& lines) {
  for (std::size_t i = 0; i < lines.size(); ++i) {
    o << "<text x=\"10\" y=\"" << num(y0 + 14.0 * static_cast<double>(i)) << "\" font-size=\"9\" fill=\"#555\">"
      << escape(lines[i]) << "</text>\n";
  }
}

void error_bar(std::ostringstream& o, double x, double y_lo, double y_hi) {
  o << "<line x1=\"" << num(x) << "\" x2=\"" << num(x) << "\" y1=\"" << num(y_lo) << "\" y2=\"" << num(y_hi)
    << "\" stroke=\"black\"/>\n";
  for (double y : {y_lo, y_hi}) {
    o << "<line x1=\"" << num(x - 3) << "\" x2=\"" << num(x + 3) << "\" y1=\"" << num(y) << "\" y2=\"" << num(y)
      << "\" stroke=\"black\"/>\n";
  }
}

}  // namespace

std::string escape(const std::string& text) {
  std::string out;
  for (char c : text) {
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

std::string bar_chart(const std::string& title, const std::string& y_label, const std::vector<BarGroup>& groups,
                      const std::vector<std::string>& footer) {
  constexpr double kBar = 18, kGap = 24;
  double lo = 0.0, hi = 0.0;
  std::vector<std::string> legend;
  double inner = 0.0;
  for (const BarGroup& g : groups) {
    inner += kBar * static_cast<double>(g.bars.size()) + kGap;
    for (const Bar& b : g.bars) {
      lo = std::min(lo, b.value - b.error);
      hi = std::max(hi, b.value + b.error);
      if (std::find(legend.begin(), legend.end(), b.label) == legend.end()) legend.push_back(b.label);
    }
  }
  const Axis a = nice_axis(lo, hi);
  Frame f;
  f.width = std::max(200.0, inner + kGap);
  const double w = f.left + f.width + 150;
  const double h = f.top + f.height + 70 + 14.0 * static_cast<double>(footer.size());
  std::ostringstream o;
  header(o, w, h, title);
  y_axis(o, f, a, y_label);
  auto y = [&](double v) { return f.top + f.height * (1.0 - (v - a.lo) / (a.hi - a.lo)); };
  double x = f.left + kGap;
  for (const BarGroup& g : groups) {
    const double start = x;
    for (const Bar& b : g.bars) {
      const auto li = std::find(legend.begin(), legend.end(), b.label) - legend.begin();
      const double top = y(std::max(0.0, b.value)), bottom = y(std::min(0.0, b.value));
      o << "<rect x=\"" << num(x) << "\" y=\"" << num(top) << "\" width=\"" << num(kBar - 2) << "\" height=\""
        << num(bottom - top) << "\" fill=\"" << kPalette[li % kPaletteSize] << "\"><title>" << escape(g.label)
        << " " << escape(b.label) << ": " << tick(b.value) << "</title></rect>\n";
      if (b.error > 0) error_bar(o, x + kBar / 2 - 1, y(b.value - b.error), y(b.value + b.error));
      x += kBar;
    }
    o << "<text x=\"" << num((start + x) / 2) << "\" y=\"" << num(f.top + f.height + 16)
      << "\" text-anchor=\"middle\">" << escape(g.label) << "</text>\n";
    x += kGap;
  }
  o << "<line x1=\"" << num(f.left) << "\" x2=\"" << num(f.left + f.width) << "\" y1=\"" << num(y(0.0))
    << "\" y2=\"" << num(y(0.0)) << "\" stroke=\"black\"/>\n";
  for (std::size_t i = 0; i < legend.size(); ++i) {
    const double ly = f.top + 16.0 * static_cast<double>(i);
    o << "<rect x=\"" << num(f.left + f.width + 16) << "\" y=\"" << num(ly) << "\" width=\"10\" height=\"10\" fill=\""
      << kPalette[i % kPaletteSize] << "\"/>\n";
    o << "<text x=\"" << num(f.left + f.width + 32) << "\" y=\"" << num(ly + 9) << "\">" << escape(legend[i])
      << "</text>\n";
  }
  footer_lines(o, f.top + f.height + 44, footer);
  o << "</svg>\n";
  return o.str();
}

std::string line_chart(const std::string& title, const std::string& x_label, const std::string& y_label,
                       const std::vector<Series>& series, const std::vector<std::string>& footer) {
  double xlo = 0, xhi = 1, ylo = 0, yhi = 1;
  bool first = true;
  for (const Series& s : series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      const double e = s.error.empty() ? 0.0 : s.error[i];
      if (first) {
        xlo = xhi = s.x[i];
        ylo = s.y[i] - e;
        yhi = s.y[i] + e;
        first = false;
      }
      xlo = std::min(xlo, s.x[i]);
      xhi = std::max(xhi, s.x[i]);
      ylo = std::min(ylo, s.y[i] - e);
      yhi = std::max(yhi, s.y[i] + e);
    }
  }
  const Axis ax = nice_axis(xlo, xhi), ay = nice_axis(ylo, yhi);
  Frame f;
  f.width = 420;
  const double w = f.left + f.width + 150;
  const double h = f.top + f.height + 70 + 14.0 * static_cast<double>(footer.size());
  std::ostringstream o;
  header(o, w, h, title);
  y_axis(o, f, ay, y_label);
  auto px = [&](double v) { return f.left + f.width * (v - ax.lo) / (ax.hi - ax.lo); };
  auto py = [&](double v) { return f.top + f.height * (1.0 - (v - ay.lo) / (ay.hi - ay.lo)); };
  for (double v = ax.lo; v <= ax.hi + ax.step * 1e-6; v += ax.step) {
    o << "<text x=\"" << num(px(v)) << "\" y=\"" << num(f.top + f.height + 16) << "\" text-anchor=\"middle\">"
      << tick(v) << "</text>\n";
  }
  o << "<line x1=\"" << num(f.left) << "\" x2=\"" << num(f.left + f.width) << "\" y1=\"" << num(f.top + f.height)
    << "\" y2=\"" << num(f.top + f.height) << "\" stroke=\"black\"/>\n";
  o << "<text x=\"" << num(f.left + f.width / 2) << "\" y=\"" << num(f.top + f.height + 32)
    << "\" text-anchor=\"middle\">" << escape(x_label) << "</text>\n";
  for (std::size_t si = 0; si < series.size(); ++si) {
    const Series& s = series[si];
    const char* color = kPalette[si % kPaletteSize];
    o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) o << (i ? " " : "") << num(px(s.x[i])) << "," << num(py(s.y[i]));
    o << "\"/>\n";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!s.error.empty() && s.error[i] > 0) error_bar(o, px(s.x[i]), py(s.y[i] - s.error[i]), py(s.y[i] + s.error[i]));
      o << "<circle cx=\"" << num(px(s.x[i])) << "\" cy=\"" << num(py(s.y[i])) << "\" r=\"3\" fill=\"" << color
        << "\"><title>" << escape(s.label) << " " << tick(s.x[i]) << ": " << tick(s.y[i]) << "</title></circle>\n";
    }
    const double ly = f.top + 16.0 * static_cast<double>(si);
    o << "<rect x=\"" << num(f.left + f.width + 16) << "\" y=\"" << num(ly) << "\" width=\"10\" height=\"10\" fill=\""
      << color << "\"/>\n";
    o << "<text x=\"" << num(f.left + f.width + 32) << "\" y=\"" << num(ly + 9) << "\">" << escape(s.label)
      << "</text>\n";
  }
  footer_lines(o, f.top + f.height + 50, footer);
  o << "</svg>\n";
  return o.str();
}

}  // namespace clpd::svg
