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

#ifndef DPFLOW_DP_GD_H_
#define DPFLOW_DP_GD_H_

#include <cstdint>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <vector>

#include <Eigen/Core>

#include "dpflow/rf_model.h"
#include "dpflow/rng.h"

namespace dpflow {

// Clipping constant meaning "never clip".
inline constexpr double kNoClip = std::numeric_limits<double>::infinity();

// Above this norm an iterate is treated as diverged.
inline constexpr double kDivergenceNorm = 1e12;

// Iterates are all stored while p * (T + 1) stays below this many values.
inline constexpr double kFullCheckpointBudget = 1e7;

enum class CheckpointPolicy { kEveryStep, kGeometric };

struct DPGDConfig {
  double eta = 0.0;
  std::int64_t steps = 0;  // T
  double c_clip = kNoClip;
  double sigma = 0.0;        // noise multiplier
  Eigen::VectorXd theta0;    // empty means the zero vector
  bool record_noise = false;
  std::optional<CheckpointPolicy> checkpoint_policy;  // default: by budget

  // eta > 0, T >= 1, c_clip > 0, sigma >= 0; sigma > 0 needs a finite
  // clipping constant. Throws ConfigError.
  void Validate() const;
};

// Features, labels and per-sample feature norms of a training set. Computing
// Phi once and sharing it keeps every training routine O(n p) per step.
struct TrainingSet {
  Eigen::MatrixXd features;  // n x p
  Eigen::VectorXd labels;
  Eigen::VectorXd feature_norms;

  Eigen::Index size() const { return features.rows(); }
  Eigen::Index num_features() const { return features.cols(); }
};

TrainingSet MakeTrainingSet(const Dataset& ds, const FeatureMap& fm);
TrainingSet MakeTrainingSet(Eigen::MatrixXd features, Eigen::VectorXd labels);

struct Trajectory {
  std::vector<std::int64_t> checkpoint_steps;
  std::vector<Eigen::VectorXd> thetas;
  CheckpointPolicy policy = CheckpointPolicy::kEveryStep;

  // clip_events[(t - 1) * n + i] is 1 when sample i was clipped in the
  // update producing theta_t, t = 1..T.
  std::vector<std::uint8_t> clip_events;
  std::int64_t num_samples = 0;

  // Per-iterate statistics for t = 0..T; clip_fraction[t] refers to the
  // gradient evaluated at theta_t.
  std::vector<double> train_loss;
  std::vector<double> clip_fraction;
  std::vector<double> theta_norm;

  // Standard Gaussian draws xi_t, t = 1..T (only with record_noise).
  std::vector<Eigen::VectorXd> noise;

  double eta = 0.0;
  double c_clip = kNoClip;
  double sigma = 0.0;
  std::int64_t steps = 0;

  double realized_time() const { return eta * static_cast<double>(steps); }
  const Eigen::VectorXd& final_theta() const { return thetas.back(); }
  std::int64_t total_clip_events() const;
};

// 2 phi_i (phi_i . theta - y_i): gradient of (phi_i . theta - y_i)^2.
Eigen::VectorXd PerSampleGradient(const Eigen::VectorXd& theta,
                                  const Eigen::VectorXd& phi_i, double y_i);

struct ClipResult {
  Eigen::VectorXd gradient;
  bool clipped = false;
};

// g / max(1, |g| / c_clip). Throws ConfigError when c_clip <= 0.
ClipResult ClipGradient(const Eigen::VectorXd& g, double c_clip);

// Derivative of the clipped per-sample loss at residual z:
// 2 z min(1, c_clip / (2 |z| feat_norm)), and 2 z for z = 0.
// Throws DegenerateFeatureError when feat_norm <= 0.
double ClippedLossDerivative(double z, double feat_norm, double c_clip);

// (1/n) sum_i clip(g_i) at theta. When `clipped` is given it receives one
// flag per sample.
Eigen::VectorXd ClippedGradient(const TrainingSet& ts,
                                const Eigen::VectorXd& theta, double c_clip,
                                std::vector<std::uint8_t>* clipped = nullptr);

// Algorithm: full-batch DP-GD with per-sample clipping and Gaussian noise of
// standard deviation sqrt(eta) * (2 c_clip / n) * sigma per coordinate.
// Throws DivergenceError when an iterate becomes non-finite or exceeds
// kDivergenceNorm.
Trajectory RunDpGd(const DPGDConfig& cfg, const TrainingSet& ts, Rng& rng);
Trajectory RunDpGd(const DPGDConfig& cfg, const Dataset& ds,
                   const FeatureMap& fm, Rng& rng);

// Largest eigenvalue of K = Phi Phi^T (dense eigensolve of the smaller Gram
// matrix).
double LargestKernelEigenvalue(const TrainingSet& ts);

// n / lambda_max(K): GD on the quadratic loss is stable iff eta is below it.
double GdStabilityBound(const TrainingSet& ts);

// Plain gradient descent on the unclipped quadratic loss (sigma and c_clip
// in `cfg` are ignored). Throws StabilityError when eta is at or above the
// stability bound; pass `lambda_max` to skip recomputing it.
Trajectory RunGd(const DPGDConfig& cfg, const TrainingSet& ts,
                 std::optional<double> lambda_max = std::nullopt);

struct ClipDetection {
  std::vector<std::uint8_t> flags;
  // min_i (c_clip / (2 |phi_i|) - |phi_i . theta - y_i|).
  double margin = 0.0;
};

// Sample i is flagged iff |phi_i . theta - y_i| >= c_clip / (2 |phi_i|).
ClipDetection DetectClipping(const Eigen::VectorXd& theta,
                             const TrainingSet& ts, double c_clip);

// Binary checkpoint file: "DPGD", u32 version, u64 p, u64 count, then
// count * p little-endian f64 values.
inline constexpr std::uint32_t kCheckpointVersion = 1;
void WriteCheckpoints(const Trajectory& traj, std::ostream& out);
std::vector<Eigen::VectorXd> ReadCheckpoints(std::istream& in);

// CSV with header step,train_loss,clip_fraction,theta_norm.
void WriteTrajectorySummary(const Trajectory& traj, std::ostream& out);

}  // namespace dpflow

#endif  // DPFLOW_DP_GD_H_
