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

#include "dpflow/diagnostics.h"

#include <cmath>
#include <limits>

#include "dpflow/errors.h"
#include "dpflow/kernels.h"

namespace dpflow {
namespace {

RegimeStatus Classify(double ratio, bool strict) {
  constexpr double kBoundaryTol = 1e-12;
  if (std::abs(ratio - 1.0) <= kBoundaryTol) return RegimeStatus::kBoundary;
  if (strict ? ratio < 1.0 : ratio <= 1.0) return RegimeStatus::kInside;
  return RegimeStatus::kOutside;
}

}  // namespace

SpectrumReport MakeSpectrumReport(const SpectralDecomp& sd, std::int64_t d) {
  const auto n = static_cast<std::int64_t>(sd.num_samples());
  if (n <= d) {
    throw RegimeError("spectrum report needs n > d (n = " + std::to_string(n) +
                      ", d = " + std::to_string(d) + ")");
  }
  if (d < 1) throw ConfigError("spectrum report needs d >= 1");
  SpectrumReport r;
  r.n = n;
  r.d = d;
  r.p = static_cast<std::int64_t>(sd.num_features());
  r.lambda_d = sd.eigvals_K[d - 1];
  r.lambda_d_plus_1 = sd.eigvals_K[d];
  r.lambda_min = sd.lambda_min();
  r.gap_ratio = r.lambda_d_plus_1 > 0.0
                    ? r.lambda_d / r.lambda_d_plus_1
                    : std::numeric_limits<double>::infinity();
  return r;
}

ClipCertificate ClipFreeCertificate(const Trajectory& traj,
                                    const TrainingSet& ts, double c_clip) {
  if (!(c_clip > 0.0)) throw ConfigError("c_clip must be > 0");
  ClipCertificate cert;
  cert.worst_margin = std::numeric_limits<double>::infinity();
  if (std::isinf(c_clip)) {
    cert.clip_free = true;
    return cert;
  }
  const std::size_t count = traj.thetas.size();
  for (std::size_t c = 0; c < count; ++c) {
    const std::int64_t step = traj.checkpoint_steps[c];
    const std::int64_t gap =
        c + 1 < count ? traj.checkpoint_steps[c + 1] - step : 1;
    const Eigen::VectorXd residuals =
        kernels::MatVec(ts.features, traj.thetas[c]) - ts.labels;
    for (Eigen::Index i = 0; i < ts.size(); ++i) {
      const double fn = ts.feature_norms[i];
      const double slack =
          gap > 1 ? fn * traj.eta * c_clip * static_cast<double>(gap - 1) : 0.0;
      const double margin =
          c_clip / (2.0 * fn) - std::abs(residuals[i]) - slack;
      if (margin < cert.worst_margin) {
        cert.worst_margin = margin;
        cert.worst_step = step;
        cert.worst_sample = i;
      }
    }
  }
  cert.clip_free = cert.worst_margin > 0.0;
  return cert;
}

bool RegimeReport::all_inside() const {
  for (const auto& c : conditions) {
    if (c.status != RegimeStatus::kInside) return false;
  }
  return true;
}

RegimeReport RegimeCheck(std::int64_t n, std::int64_t d, std::int64_t p) {
  if (n < 2 || d < 2 || p < 2) throw ConfigError("n, d, p must be >= 2");
  const double nn = static_cast<double>(n);
  const double dd = static_cast<double>(d);
  const double pp = static_cast<double>(p);
  const double log_d = std::log(dd);
  RegimeReport report;

  const double r1 = nn * nn / pp;
  report.conditions.push_back(
      {"n = O(sqrt p)", "n^2 / p", r1, Classify(r1, false)});

  // Upper direction of the Theta; the lower one holds for any p >= n.
  const double r2 = std::log(nn) / std::log(pp);
  report.conditions.push_back(
      {"log n = Theta(log p)", "log n / log p", r2, Classify(r2, false)});

  const double r3 = dd * log_d * log_d / nn;
  report.conditions.push_back(
      {"n = omega(d log^2 d)", "d log^2 d / n", r3, Classify(r3, true)});

  const double r4 = nn * log_d * log_d * log_d / std::pow(dd, 1.5);
  report.conditions.push_back(
      {"n = o(d^{3/2} / log^3 d)", "n log^3 d / d^{3/2}", r4, Classify(r4, true)});
  return report;
}

std::string ToString(RegimeStatus status) {
  switch (status) {
    case RegimeStatus::kInside:
      return "inside";
    case RegimeStatus::kBoundary:
      return "boundary";
    case RegimeStatus::kOutside:
      return "outside";
  }
  return "unknown";
}

}  // namespace dpflow
