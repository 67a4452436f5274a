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

#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "dpflow/errors.h"

namespace dpflow {
namespace {

TEST(FormatDouble, RoundTripsAndSpecialValues) {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 123456789.123456789, 0.0}) {
    EXPECT_EQ(std::stod(FormatDouble(v)), v);
  }
  EXPECT_EQ(FormatDouble(0.1), "0.10000000000000001");
  EXPECT_EQ(FormatDouble(std::numeric_limits<double>::quiet_NaN()), "nan");
  EXPECT_EQ(FormatDouble(std::numeric_limits<double>::infinity()), "inf");
  EXPECT_EQ(FormatDouble(-std::numeric_limits<double>::infinity()), "-inf");
}

TEST(CsvLine, JoinsFields) {
  EXPECT_EQ(CsvLine({"a", "1", "x"}), "a,1,x");
  EXPECT_EQ(CsvLine({}), "");
}

TEST(LinePlotSvg, IsSelfContained) {
  const std::string svg = LinePlotSvg(
      {{"a<b", {1, 10, 100}, {0.5, 0.4, std::nan("")}, {0.1, 0.1, 0.1}},
       {"c", {2, 20}, {1, 2}, {}}},
      {"title", "x", "y", true, false});
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
  EXPECT_NE(svg.find("a&lt;b"), std::string::npos);
  EXPECT_EQ(svg.find("href"), std::string::npos);
  EXPECT_EQ(svg.find("nan"), std::string::npos);
}

TEST(HeatMapSvg, ChecksLabels) {
  Eigen::MatrixXd v(2, 3);
  v << 1, 2, 3, 4, std::nan(""), 6;
  const std::string svg =
      HeatMapSvg(v, {"r0", "r1"}, {"c0", "c1", "c2"}, {"heat", "C", "T"});
  EXPECT_NE(svg.find("#bbbbbb"), std::string::npos);
  EXPECT_THROW(HeatMapSvg(v, {"r0"}, {"c0", "c1", "c2"}, {}), DimensionError);
}

TEST(Timestamp, Format) {
  const std::string ts = Timestamp();
  ASSERT_EQ(ts.size(), 15u);
  EXPECT_EQ(ts[8], 'T');
}

}  // namespace
}  // namespace dpflow
