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

#ifndef DPFLOW_DIAGNOSTICS_H_
#define DPFLOW_DIAGNOSTICS_H_

#include <cstdint>
#include <string>
#include <vector>

#include "dpflow/dp_gd.h"
#include "dpflow/ou_gf.h"

namespace dpflow {

// Kernel eigenvalues around the d-th position. Positions are 1-based as in
// lambda_1 >= ... >= lambda_n.
struct SpectrumReport {
  double lambda_d = 0.0;
  double lambda_d_plus_1 = 0.0;
  double lambda_min = 0.0;
  double gap_ratio = 0.0;  // lambda_d / lambda_{d+1}
  std::int64_t n = 0;
  std::int64_t d = 0;
  std::int64_t p = 0;
};

// Throws RegimeError unless n > d.
SpectrumReport MakeSpectrumReport(const SpectralDecomp& sd, std::int64_t d);

struct ClipCertificate {
  bool clip_free = false;
  // min over checkpoints t and samples i of
  // c_clip / (2 |phi_i|) - |phi_i . theta_t - y_i| - slack_{i,t}.
  double worst_margin = 0.0;
  std::int64_t worst_step = -1;
  std::int64_t worst_sample = -1;
};

// True iff no stored checkpoint leaves the no-clipping region. Between two
// checkpoints g > 1 steps apart the residual can move by at most
// |phi_i| eta c_clip per step inside the region, so a slack of
// |phi_i| eta c_clip (g - 1) is charged against the margin.
ClipCertificate ClipFreeCertificate(const Trajectory& traj,
                                    const TrainingSet& ts, double c_clip);

enum class RegimeStatus { kInside, kBoundary, kOutside };

struct RegimeCondition {
  std::string name;
  std::string expression;
  double ratio = 0.0;  // inside iff ratio < 1 (constants set to 1)
  RegimeStatus status = RegimeStatus::kOutside;
};

struct RegimeReport {
  std::vector<RegimeCondition> conditions;
  bool all_inside() const;
};

// Scaling conditions n = O(sqrt p), log n = Theta(log p), n = omega(d log^2 d)
// and n = o(d^{3/2} / log^3 d), each reduced to a ratio with unit constants.
RegimeReport RegimeCheck(std::int64_t n, std::int64_t d, std::int64_t p);

std::string ToString(RegimeStatus status);

}  // namespace dpflow

#endif  // DPFLOW_DIAGNOSTICS_H_
