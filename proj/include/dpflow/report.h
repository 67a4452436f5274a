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

#ifndef DPFLOW_REPORT_H_
#define DPFLOW_REPORT_H_

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace dpflow {

// Shortest round-trip text for a double (17 significant digits); NaN and
// infinities print as nan, inf, -inf.
std::string FormatDouble(double value);

// Joins already formatted fields with commas.
std::string CsvLine(const std::vector<std::string>& fields);

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> err;  // optional half-width of error bars
};

struct PlotOptions {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_x = false;
  bool log_y = false;
  int width = 720;
  int height = 480;
};

std::string LinePlotSvg(const std::vector<Series>& series,
                        const PlotOptions& opts);

// values(r, c) is drawn with row 0 at the bottom; non-finite cells are grey.
std::string HeatMapSvg(const Eigen::MatrixXd& values,
                       const std::vector<std::string>& row_labels,
                       const std::vector<std::string>& col_labels,
                       const PlotOptions& opts);

// UTC timestamp such as 20261018T101500.
std::string Timestamp();

void WriteTextFile(const std::string& path, const std::string& text);

}  // namespace dpflow

#endif  // DPFLOW_REPORT_H_
