// Copyright 2026 The w2snn Authors
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

#include "w2snn/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "w2snn/errors.hpp"

namespace w2snn::io {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 440.0;
constexpr double kLeft = 72.0;
constexpr double kRight = 620.0;
constexpr double kTop = 48.0;
constexpr double kBottom = 392.0;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

std::string escape(const std::string& s) {
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

struct Axis {
  double lo = 0.0;
  double hi = 1.0;
  bool log = false;

  double place(double v, double a, double b) const {
    double t = log ? (std::log10(v) - std::log10(lo)) / (std::log10(hi) - std::log10(lo))
                   : (v - lo) / (hi - lo);
    return a + t * (b - a);
  }

  std::vector<double> ticks() const {
    std::vector<double> out;
    if (log) {
      const int e0 = static_cast<int>(std::floor(std::log10(lo)));
      const int e1 = static_cast<int>(std::ceil(std::log10(hi)));
      for (int e = e0; e <= e1; ++e) {
        const double v = std::pow(10.0, e);
        if (v >= lo * (1.0 - 1e-9) && v <= hi * (1.0 + 1e-9)) out.push_back(v);
      }
      if (out.size() < 2) {
        out = {lo, hi};
      }
      return out;
    }
    const double span = hi - lo;
    const double raw = span / 5.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double m : {1.0, 2.0, 5.0, 10.0}) {
      if (raw <= m * mag) {
        step = m * mag;
        break;
      }
    }
    const double first = std::ceil(lo / step) * step;
    for (double v = first; v <= hi + step * 1e-9; v += step) out.push_back(v);
    return out;
  }
};

}  // namespace

std::string render_svg(const PlotSpec& spec) {
  Axis xa, ya;
  xa.log = spec.logx;
  ya.log = spec.logy;
  double xlo = std::numeric_limits<double>::infinity(), xhi = -xlo;
  double ylo = xlo, yhi = -xlo;
  for (const Series& s : spec.series) {
    if (s.x.size() != s.y.size()) throw DimensionError("svg: series x/y size mismatch");
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (spec.logx && s.x[i] <= 0.0) throw NumericError("svg: log x-axis with non-positive value");
      if (spec.logy && s.y[i] <= 0.0) throw NumericError("svg: log y-axis with non-positive value");
      xlo = std::min(xlo, s.x[i]);
      xhi = std::max(xhi, s.x[i]);
      ylo = std::min(ylo, s.y[i]);
      yhi = std::max(yhi, s.y[i]);
    }
  }
  if (!std::isfinite(xlo) || !std::isfinite(ylo)) {
    xlo = ylo = 0.0;
    xhi = yhi = 1.0;
  }
  auto widen = [](double& lo, double& hi, bool log) {
    if (lo == hi) {
      if (log) {
        lo /= 2.0;
        hi *= 2.0;
      } else {
        lo -= 0.5;
        hi += 0.5;
      }
      return;
    }
    if (log) {
      const double f = std::pow(hi / lo, 0.05);
      lo /= f;
      hi *= f;
    } else {
      const double pad = (hi - lo) * 0.05;
      lo -= pad;
      hi += pad;
    }
  };
  widen(xlo, xhi, spec.logx);
  widen(ylo, yhi, spec.logy);
  xa.lo = xlo;
  xa.hi = xhi;
  ya.lo = ylo;
  ya.hi = yhi;

  std::string svg;
  svg += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" + num(kWidth) +
         "\" height=\"" + num(kHeight) + "\" viewBox=\"0 0 " + num(kWidth) + " " + num(kHeight) +
         "\">\n";
  svg += "<rect x=\"0\" y=\"0\" width=\"" + num(kWidth) + "\" height=\"" + num(kHeight) +
         "\" fill=\"white\"/>\n";
  svg += "<text x=\"" + num(kWidth / 2) + "\" y=\"24\" font-family=\"sans-serif\" font-size=\"15\""
         " text-anchor=\"middle\">" + escape(spec.title) + "</text>\n";

  // Axes and ticks.
  svg += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(kBottom) + "\" x2=\"" + num(kRight) +
         "\" y2=\"" + num(kBottom) + "\" stroke=\"black\"/>\n";
  svg += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(kTop) + "\" x2=\"" + num(kLeft) +
         "\" y2=\"" + num(kBottom) + "\" stroke=\"black\"/>\n";
  for (double tx : xa.ticks()) {
    const double px = xa.place(tx, kLeft, kRight);
    svg += "<line x1=\"" + num(px) + "\" y1=\"" + num(kBottom) + "\" x2=\"" + num(px) + "\" y2=\"" +
           num(kBottom + 5) + "\" stroke=\"black\"/>\n";
    svg += "<text x=\"" + num(px) + "\" y=\"" + num(kBottom + 18) +
           "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">" + num(tx) +
           "</text>\n";
  }
  for (double ty : ya.ticks()) {
    const double py = ya.place(ty, kBottom, kTop);
    svg += "<line x1=\"" + num(kLeft - 5) + "\" y1=\"" + num(py) + "\" x2=\"" + num(kLeft) +
           "\" y2=\"" + num(py) + "\" stroke=\"black\"/>\n";
    svg += "<text x=\"" + num(kLeft - 8) + "\" y=\"" + num(py + 4) +
           "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">" + num(ty) +
           "</text>\n";
  }
  svg += "<text x=\"" + num((kLeft + kRight) / 2) + "\" y=\"" + num(kHeight - 12) +
         "\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">" +
         escape(spec.xlabel) + "</text>\n";
  svg += "<text x=\"18\" y=\"" + num((kTop + kBottom) / 2) +
         "\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\" "
         "transform=\"rotate(-90 18 " + num((kTop + kBottom) / 2) + ")\">" +
         escape(spec.ylabel) + "</text>\n";

  // Series.
  double legend_y = kTop + 6.0;
  for (const Series& s : spec.series) {
    if (s.line && s.x.size() > 1) {
      svg += "<polyline fill=\"none\" stroke=\"" + s.color + "\" stroke-width=\"1.5\" points=\"";
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        svg += num(xa.place(s.x[i], kLeft, kRight)) + "," + num(ya.place(s.y[i], kBottom, kTop));
        if (i + 1 < s.x.size()) svg += " ";
      }
      svg += "\"/>\n";
    }
    if (s.markers || !s.line) {
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        svg += "<circle cx=\"" + num(xa.place(s.x[i], kLeft, kRight)) + "\" cy=\"" +
               num(ya.place(s.y[i], kBottom, kTop)) + "\" r=\"2.5\" fill=\"" + s.color + "\"/>\n";
      }
    }
    if (!s.label.empty()) {
      svg += "<rect x=\"" + num(kRight - 150) + "\" y=\"" + num(legend_y - 8) +
             "\" width=\"10\" height=\"10\" fill=\"" + s.color + "\"/>\n";
      svg += "<text x=\"" + num(kRight - 135) + "\" y=\"" + num(legend_y + 1) +
             "\" font-family=\"sans-serif\" font-size=\"11\">" + escape(s.label) + "</text>\n";
      legend_y += 16.0;
    }
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace w2snn::io
