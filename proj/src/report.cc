// Copyright 2026 The dpflow Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "dpflow/report.h"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <limits>
#include <sstream>

#include "dpflow/errors.h"

namespace dpflow {
namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c",
                                    "#9467bd", "#ff7f0e", "#8c564b",
                                    "#e377c2", "#17becf"};

std::string Escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string Short(double v) {
  std::ostringstream os;
  os.precision(3);
  os << v;
  return os.str();
}

struct Axis {
  double lo = 0.0;
  double hi = 1.0;
  bool log = false;

  double Map(double v, double a, double b) const {
    const double t = log ? (std::log10(v) - std::log10(lo)) /
                               (std::log10(hi) - std::log10(lo))
                         : (v - lo) / (hi - lo);
    return a + t * (b - a);
  }
};

Axis FitAxis(const std::vector<double>& values, bool log) {
  Axis axis;
  axis.log = log;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (double v : values) {
    if (!std::isfinite(v) || (log && v <= 0.0)) continue;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (!std::isfinite(lo)) {
    lo = log ? 1.0 : 0.0;
    hi = log ? 10.0 : 1.0;
  }
  if (hi <= lo) {
    if (log) {
      lo /= 2.0;
      hi *= 2.0;
    } else {
      const double pad = lo == 0.0 ? 1.0 : std::abs(lo) * 0.1;
      lo -= pad;
      hi += pad;
    }
  } else if (!log) {
    const double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;
  }
  axis.lo = lo;
  axis.hi = hi;
  return axis;
}

// Linear ramp from pale yellow to dark blue.
std::string RampColor(double t) {
  t = std::clamp(t, 0.0, 1.0);
  const int r = static_cast<int>(std::lround(255 + t * (8 - 255)));
  const int g = static_cast<int>(std::lround(255 + t * (48 - 255)));
  const int b = static_cast<int>(std::lround(204 + t * (107 - 204)));
  char buf[8];
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", r, g, b);
  return buf;
}

void Header(std::ostringstream& os, const PlotOptions& opts) {
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << opts.width
     << "\" height=\"" << opts.height << "\" font-family=\"sans-serif\" "
     << "font-size=\"12\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
     << "<text x=\"" << opts.width / 2 << "\" y=\"20\" text-anchor=\"middle\" "
     << "font-size=\"14\">" << Escape(opts.title) << "</text>\n";
}

void AxisLabels(std::ostringstream& os, const PlotOptions& opts, double left,
                double right, double top, double bottom) {
  os << "<text x=\"" << (left + right) / 2 << "\" y=\"" << opts.height - 8
     << "\" text-anchor=\"middle\">" << Escape(opts.x_label) << "</text>\n"
     << "<text x=\"14\" y=\"" << (top + bottom) / 2
     << "\" text-anchor=\"middle\" transform=\"rotate(-90 14 "
     << (top + bottom) / 2 << ")\">" << Escape(opts.y_label) << "</text>\n";
}

}  // namespace

std::string FormatDouble(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value,
                                 std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

std::string CsvLine(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out += ',';
    out += fields[i];
  }
  return out;
}

std::string LinePlotSvg(const std::vector<Series>& series,
                        const PlotOptions& opts) {
  const double left = 70, right = opts.width - 150.0, top = 40,
               bottom = opts.height - 50.0;
  std::vector<double> xs, ys;
  for (const auto& s : series) {
    xs.insert(xs.end(), s.x.begin(), s.x.end());
    for (std::size_t i = 0; i < s.y.size(); ++i) {
      const double e = i < s.err.size() ? s.err[i] : 0.0;
      ys.push_back(s.y[i] - e);
      ys.push_back(s.y[i] + e);
    }
  }
  const Axis ax = FitAxis(xs, opts.log_x);
  const Axis ay = FitAxis(ys, opts.log_y);

  std::ostringstream os;
  Header(os, opts);
  os << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\""
     << right - left << "\" height=\"" << bottom - top
     << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double fx = ax.log ? std::pow(10.0, std::log10(ax.lo) +
                                                  k * (std::log10(ax.hi) -
                                                       std::log10(ax.lo)) / 4)
                             : ax.lo + k * (ax.hi - ax.lo) / 4;
    const double fy = ay.log ? std::pow(10.0, std::log10(ay.lo) +
                                                  k * (std::log10(ay.hi) -
                                                       std::log10(ay.lo)) / 4)
                             : ay.lo + k * (ay.hi - ay.lo) / 4;
    const double px = ax.Map(fx, left, right);
    const double py = ay.Map(fy, bottom, top);
    os << "<text x=\"" << px << "\" y=\"" << bottom + 16
       << "\" text-anchor=\"middle\">" << Short(fx) << "</text>\n"
       << "<text x=\"" << left - 6 << "\" y=\"" << py + 4
       << "\" text-anchor=\"end\">" << Short(fy) << "</text>\n";
  }
  AxisLabels(os, opts, left, right, top, bottom);

  for (std::size_t s = 0; s < series.size(); ++s) {
    const auto& ser = series[s];
    const char* color = kPalette[s % std::size(kPalette)];
    std::ostringstream pts;
    for (std::size_t i = 0; i < ser.x.size() && i < ser.y.size(); ++i) {
      if (!std::isfinite(ser.y[i]) || (ax.log && ser.x[i] <= 0.0)) continue;
      const double px = ax.Map(ser.x[i], left, right);
      const double py = ay.Map(ser.y[i], bottom, top);
      pts << px << ',' << py << ' ';
      if (i < ser.err.size() && ser.err[i] > 0.0) {
        os << "<line x1=\"" << px << "\" x2=\"" << px << "\" y1=\""
           << ay.Map(ser.y[i] - ser.err[i], bottom, top) << "\" y2=\""
           << ay.Map(ser.y[i] + ser.err[i], bottom, top) << "\" stroke=\""
           << color << "\"/>\n";
      }
      os << "<circle cx=\"" << px << "\" cy=\"" << py << "\" r=\"2.5\" fill=\""
         << color << "\"/>\n";
    }
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" points=\""
       << pts.str() << "\"/>\n"
       << "<text x=\"" << right + 10 << "\" y=\"" << top + 16 * (s + 1)
       << "\" fill=\"" << color << "\">" << Escape(ser.name) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::string HeatMapSvg(const Eigen::MatrixXd& values,
                       const std::vector<std::string>& row_labels,
                       const std::vector<std::string>& col_labels,
                       const PlotOptions& opts) {
  if (static_cast<Eigen::Index>(row_labels.size()) != values.rows() ||
      static_cast<Eigen::Index>(col_labels.size()) != values.cols()) {
    throw DimensionError("heat map labels do not match the value grid");
  }
  const double left = 80, right = opts.width - 110.0, top = 40,
               bottom = opts.height - 60.0;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    const double v = values.data()[i];
    if (!std::isfinite(v)) continue;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (!(hi > lo)) hi = lo + 1.0;

  std::ostringstream os;
  Header(os, opts);
  const double cw = (right - left) / std::max<Eigen::Index>(values.cols(), 1);
  const double ch = (bottom - top) / std::max<Eigen::Index>(values.rows(), 1);
  for (Eigen::Index r = 0; r < values.rows(); ++r) {
    const double y = bottom - (r + 1) * ch;
    for (Eigen::Index c = 0; c < values.cols(); ++c) {
      const double v = values(r, c);
      const double x = left + c * cw;
      const std::string fill =
          std::isfinite(v) ? RampColor((v - lo) / (hi - lo)) : "#bbbbbb";
      os << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << cw
         << "\" height=\"" << ch << "\" fill=\"" << fill << "\"/>\n"
         << "<text x=\"" << x + cw / 2 << "\" y=\"" << y + ch / 2 + 4
         << "\" text-anchor=\"middle\" font-size=\"10\">" << Short(v)
         << "</text>\n";
    }
    os << "<text x=\"" << left - 6 << "\" y=\"" << y + ch / 2 + 4
       << "\" text-anchor=\"end\">" << Escape(row_labels[r]) << "</text>\n";
  }
  for (Eigen::Index c = 0; c < values.cols(); ++c) {
    os << "<text x=\"" << left + (c + 0.5) * cw << "\" y=\"" << bottom + 16
       << "\" text-anchor=\"middle\">" << Escape(col_labels[c]) << "</text>\n";
  }
  AxisLabels(os, opts, left, right, top, bottom);
  for (int k = 0; k <= 10; ++k) {
    const double t = k / 10.0;
    os << "<rect x=\"" << right + 20 << "\" y=\""
       << bottom - (k + 1) * (bottom - top) / 11 << "\" width=\"16\" height=\""
       << (bottom - top) / 11 << "\" fill=\"" << RampColor(t) << "\"/>\n";
  }
  os << "<text x=\"" << right + 40 << "\" y=\"" << bottom << "\">" << Short(lo)
     << "</text>\n<text x=\"" << right + 40 << "\" y=\"" << top + 10 << "\">"
     << Short(hi) << "</text>\n</svg>\n";
  return os.str();
}

std::string Timestamp() {
  const std::time_t now =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y%m%dT%H%M%S", &tm);
  return buf;
}

void WriteTextFile(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path + " for writing");
  out << text;
  if (!out) throw Error("failed writing " + path);
}

}  // namespace dpflow
