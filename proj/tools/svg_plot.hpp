// Copyright 2026 The disco Authors
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

#ifndef DISCO_TOOLS_SVG_PLOT_HPP_
#define DISCO_TOOLS_SVG_PLOT_HPP_

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "disco/error.hpp"

namespace disco::plot {

struct Series {
  std::string label;
  std::vector<double> x, y;
};

namespace detail {

inline std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

// A "nice" tick step covering roughly `target` divisions of the span.
inline double nice_step(double span, int target) {
  const double raw = span / std::max(1, target);
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double norm = raw / mag;
  double step = 10.0;
  if (norm <= 1.0) step = 1.0;
  else if (norm <= 2.0) step = 2.0;
  else if (norm <= 5.0) step = 5.0;
  return step * mag;
}

}  // namespace detail

/// Minimal line chart: axes, ticks, grid, one polyline per series, legend.
inline void write_line_chart(const std::string& path, const std::string& title,
                             const std::string& x_label,
                             const std::string& y_label,
                             const std::vector<Series>& series) {
  if (series.empty()) raise(Errc::ConfigError, "no series to plot");
  double x_min = 0, x_max = 0, y_min = 0, y_max = 0;
  bool any = false;
  for (const Series& s : series) {
    if (s.x.size() != s.y.size())
      raise(Errc::ShapeError, "series '" + s.label + "' has ragged columns");
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      if (!any) {
        x_min = x_max = s.x[i];
        y_min = y_max = s.y[i];
        any = true;
      }
      x_min = std::min(x_min, s.x[i]);
      x_max = std::max(x_max, s.x[i]);
      y_min = std::min(y_min, s.y[i]);
      y_max = std::max(y_max, s.y[i]);
    }
  }
  if (!any) raise(Errc::ConfigError, "no finite points to plot");
  if (x_max == x_min) x_max = x_min + 1;
  if (y_max == y_min) y_max = y_min + 1;

  const double w = 720, h = 440;
  const double ml = 72, mr = 24, mt = 40, mb = 56;
  const double pw = w - ml - mr, ph = h - mt - mb;
  const auto sx = [&](double v) { return ml + (v - x_min) / (x_max - x_min) * pw; };
  const auto sy = [&](double v) { return mt + ph - (v - y_min) / (y_max - y_min) * ph; };

  static const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c",
                                   "#9467bd", "#ff7f0e", "#8c564b",
                                   "#17becf", "#7f7f7f"};
  constexpr int kPaletteSize = 8;

  std::ofstream out(path);
  if (!out) raise(Errc::IoError, "cannot open " + path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w
      << "\" height=\"" << h << "\" viewBox=\"0 0 " << w << " " << h
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out << "<rect width=\"" << w << "\" height=\"" << h << "\" fill=\"white\"/>\n";
  out << "<text x=\"" << w / 2 << "\" y=\"24\" text-anchor=\"middle\" "
         "font-size=\"15\">" << title << "</text>\n";

  const double x_step = detail::nice_step(x_max - x_min, 6);
  const double y_step = detail::nice_step(y_max - y_min, 6);
  for (double t = std::ceil(x_min / x_step) * x_step; t <= x_max + 1e-9 * x_step;
       t += x_step) {
    out << "<line x1=\"" << sx(t) << "\" y1=\"" << mt << "\" x2=\"" << sx(t)
        << "\" y2=\"" << mt + ph << "\" stroke=\"#e0e0e0\"/>\n";
    out << "<text x=\"" << sx(t) << "\" y=\"" << mt + ph + 18
        << "\" text-anchor=\"middle\">" << detail::fmt(t) << "</text>\n";
  }
  for (double t = std::ceil(y_min / y_step) * y_step; t <= y_max + 1e-9 * y_step;
       t += y_step) {
    out << "<line x1=\"" << ml << "\" y1=\"" << sy(t) << "\" x2=\"" << ml + pw
        << "\" y2=\"" << sy(t) << "\" stroke=\"#e0e0e0\"/>\n";
    out << "<text x=\"" << ml - 8 << "\" y=\"" << sy(t) + 4
        << "\" text-anchor=\"end\">" << detail::fmt(t) << "</text>\n";
  }
  out << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << pw
      << "\" height=\"" << ph << "\" fill=\"none\" stroke=\"#404040\"/>\n";
  out << "<text x=\"" << ml + pw / 2 << "\" y=\"" << h - 14
      << "\" text-anchor=\"middle\">" << x_label << "</text>\n";
  out << "<text x=\"18\" y=\"" << mt + ph / 2
      << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 " << mt + ph / 2
      << ")\">" << y_label << "</text>\n";

  for (std::size_t si = 0; si < series.size(); ++si) {
    const Series& s = series[si];
    const char* color = kPalette[si % kPaletteSize];
    out << "<polyline fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      out << detail::fmt(sx(s.x[i])) << "," << detail::fmt(sy(s.y[i])) << " ";
    }
    out << "\"/>\n";
    const double ly = mt + 16 + 18 * static_cast<double>(si);
    out << "<line x1=\"" << ml + pw - 130 << "\" y1=\"" << ly << "\" x2=\""
        << ml + pw - 106 << "\" y2=\"" << ly << "\" stroke=\"" << color
        << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << ml + pw - 100 << "\" y=\"" << ly + 4 << "\">"
        << s.label << "</text>\n";
  }
  out << "</svg>\n";
  if (!out) raise(Errc::IoError, "failed writing " + path);
}

}  // namespace disco::plot

#endif  // DISCO_TOOLS_SVG_PLOT_HPP_
