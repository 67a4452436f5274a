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

#include "dpflow/dp_gd.h"

#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "dpflow/errors.h"
#include "dpflow/rf_model.h"
#include "dpflow/rng.h"
#include "test_util.h"

namespace dpflow {
namespace {

using testing::Golden;
using testing::ToMatrix;
using testing::ToVector;

TrainingSet FixedSet() {
  const auto& g = Golden()["fixed_problem"];
  return MakeTrainingSet(ToMatrix(g["features"]), ToVector(g["labels"]));
}

TrainingSet RandomSet(Eigen::Index n, Eigen::Index p, std::uint64_t seed) {
  const Dataset ds = SampleData(n, 6, seed);
  return MakeTrainingSet(ds, InitFeatures(p, 6, seed));
}

TEST(ClipGradient, ScalesOntoBall) {
  Eigen::VectorXd g(2);
  g << 3.0, 4.0;
  const ClipResult a = ClipGradient(g, 10.0);
  EXPECT_FALSE(a.clipped);
  EXPECT_EQ(a.gradient, g);
  const ClipResult b = ClipGradient(g, 1.0);
  EXPECT_TRUE(b.clipped);
  EXPECT_NEAR(b.gradient.norm(), 1.0, 1e-15);
  EXPECT_NEAR(b.gradient[0] / b.gradient[1], 0.75, 1e-15);
  EXPECT_THROW(ClipGradient(g, 0.0), ConfigError);
}

TEST(ClippedLossDerivative, MatchesClippedGradientOnRandomInstances) {
  Rng rng = MakeRng(1, 77);
  std::uniform_real_distribution<double> unif(-3.0, 3.0);
  std::uniform_real_distribution<double> clip(0.01, 20.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const Eigen::Index p = 1 + trial % 13;
    const Eigen::VectorXd phi = GaussianVector(p, rng);
    const Eigen::VectorXd theta = GaussianVector(p, rng);
    const double y = unif(rng);
    const double c = clip(rng);
    const Eigen::VectorXd direct =
        ClipGradient(PerSampleGradient(theta, phi, y), c).gradient;
    const double z = phi.dot(theta) - y;
    const Eigen::VectorXd via_loss =
        ClippedLossDerivative(z, phi.norm(), c) * phi;
    EXPECT_LE((direct - via_loss).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(ClippedLossDerivative, EdgeCases) {
  EXPECT_EQ(ClippedLossDerivative(0.0, 2.0, 1.0), 0.0);
  EXPECT_DOUBLE_EQ(ClippedLossDerivative(0.1, 1.0, 10.0), 0.2);
  EXPECT_DOUBLE_EQ(ClippedLossDerivative(-5.0, 2.0, 1.0), -0.5);
  EXPECT_THROW(ClippedLossDerivative(1.0, 0.0, 1.0), DegenerateFeatureError);
}

TEST(ClippedGradient, NormAtMostClip) {
  const TrainingSet ts = RandomSet(30, 20, 2);
  Rng rng = MakeRng(2, 5);
  const Eigen::VectorXd theta = 10 * GaussianVector(20, rng);
  std::vector<std::uint8_t> flags;
  const Eigen::VectorXd g = ClippedGradient(ts, theta, 0.5, &flags);
  EXPECT_LE(g.norm(), 0.5 + 1e-12);
  EXPECT_EQ(flags.size(), 30u);
  const ClipDetection det = DetectClipping(theta, ts, 0.5);
  EXPECT_EQ(det.flags, flags);
  EXPECT_LT(det.margin, 0.0);
}

TEST(RunDpGd, FixedProblemMatchesGolden) {
  const auto& g = Golden()["fixed_problem"]["dpgd"];
  DPGDConfig cfg;
  cfg.eta = g["eta"].get<double>();
  cfg.steps = g["steps"].get<std::int64_t>();
  cfg.c_clip = g["c_clip"].get<double>();
  Rng rng = MakeRng(0, 0);
  const Trajectory traj = RunDpGd(cfg, FixedSet(), rng);
  EXPECT_LE(testing::MaxRelDiff(traj.final_theta(), ToVector(g["theta"])),
            1e-12);
  EXPECT_GT(traj.total_clip_events(), 0);
}

TEST(RunDpGd, FirstStepMatchesUpdateRule) {
  const TrainingSet ts = RandomSet(25, 15, 4);
  DPGDConfig cfg;
  cfg.eta = 0.02;
  cfg.steps = 1;
  cfg.c_clip = 0.3;
  cfg.sigma = 1.7;
  cfg.record_noise = true;
  Rng rng = MakeRng(4, 1);
  const Trajectory traj = RunDpGd(cfg, ts, rng);
  ASSERT_EQ(traj.noise.size(), 1u);
  const Eigen::VectorXd theta0 = Eigen::VectorXd::Zero(15);
  const Eigen::VectorXd want =
      theta0 - cfg.eta * ClippedGradient(ts, theta0, cfg.c_clip) +
      std::sqrt(cfg.eta) * (2 * cfg.c_clip / 25) * cfg.sigma * traj.noise[0];
  EXPECT_LE((traj.final_theta() - want).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(RunDpGd, SameSeedIsBitIdentical) {
  const TrainingSet ts = RandomSet(40, 30, 6);
  DPGDConfig cfg;
  cfg.eta = 0.01;
  cfg.steps = 50;
  cfg.c_clip = 1.0;
  cfg.sigma = 0.8;
  Rng r1 = MakeRng(6, 5), r2 = MakeRng(6, 5);
  EXPECT_EQ(RunDpGd(cfg, ts, r1).final_theta(),
            RunDpGd(cfg, ts, r2).final_theta());
}

TEST(RunGd, EqualsNoiselessUnclippedDpGd) {
  const TrainingSet ts = RandomSet(40, 30, 7);
  DPGDConfig cfg;
  cfg.eta = 0.5 * GdStabilityBound(ts);
  cfg.steps = 100;
  Rng rng = MakeRng(7, 5);
  const Trajectory a = RunGd(cfg, ts);
  const Trajectory b = RunDpGd(cfg, ts, rng);
  EXPECT_EQ(a.final_theta(), b.final_theta());
  EXPECT_EQ(a.train_loss, b.train_loss);
  EXPECT_LT(a.train_loss.back(), a.train_loss.front());
}

TEST(RunGd, RejectsUnstableStep) {
  const TrainingSet ts = RandomSet(40, 30, 8);
  DPGDConfig cfg;
  cfg.eta = 1.01 * GdStabilityBound(ts);
  cfg.steps = 3;
  EXPECT_THROW(RunGd(cfg, ts), StabilityError);
}

TEST(RunDpGd, DivergenceIsReported) {
  const TrainingSet ts = RandomSet(40, 30, 8);
  DPGDConfig cfg;
  cfg.eta = 50 * GdStabilityBound(ts);
  cfg.steps = 2000;
  Rng rng = MakeRng(8, 5);
  EXPECT_THROW(RunDpGd(cfg, ts, rng), DivergenceError);
}

TEST(DPGDConfig, Validation) {
  DPGDConfig cfg;
  cfg.eta = 0.1;
  cfg.steps = 1;
  EXPECT_NO_THROW(cfg.Validate());
  cfg.sigma = 1.0;  // noise needs a finite clipping constant
  EXPECT_THROW(cfg.Validate(), ConfigError);
  cfg.c_clip = 1.0;
  EXPECT_NO_THROW(cfg.Validate());
  cfg.steps = 0;
  EXPECT_THROW(cfg.Validate(), ConfigError);
  cfg.steps = 1;
  cfg.eta = -1;
  EXPECT_THROW(cfg.Validate(), ConfigError);
}

TEST(Sensitivity, AdjacentUpdatesWithinBound) {
  Rng rng = MakeRng(9, 9);
  const TrainingSet ts = RandomSet(30, 25, 9);
  const double eta = 0.05, c = 0.7;
  for (int swap = 0; swap < 100; ++swap) {
    const Eigen::VectorXd theta = 3 * GaussianVector(25, rng);
    TrainingSet other = ts;
    const Eigen::Index i = swap % 30;
    other.features.row(i) = 2 * GaussianVector(25, rng).transpose();
    other.labels[i] = -other.labels[i];
    other.feature_norms[i] = other.features.row(i).norm();
    const double dist = (eta * ClippedGradient(ts, theta, c) -
                         eta * ClippedGradient(other, theta, c))
                            .norm();
    EXPECT_LE(dist, 2 * eta * c / 30 * (1 + 1e-12));
  }
}

TEST(Checkpoints, RoundTrip) {
  const TrainingSet ts = RandomSet(20, 12, 3);
  DPGDConfig cfg;
  cfg.eta = 0.01;
  cfg.steps = 9;
  cfg.c_clip = 1.0;
  cfg.sigma = 0.5;
  Rng rng = MakeRng(3, 5);
  const Trajectory traj = RunDpGd(cfg, ts, rng);
  ASSERT_EQ(traj.thetas.size(), 10u);
  std::stringstream buf;
  WriteCheckpoints(traj, buf);
  const auto back = ReadCheckpoints(buf);
  ASSERT_EQ(back.size(), traj.thetas.size());
  for (std::size_t k = 0; k < back.size(); ++k) EXPECT_EQ(back[k], traj.thetas[k]);
  std::stringstream bad("XXXX");
  EXPECT_ANY_THROW(ReadCheckpoints(bad));
}

TEST(Checkpoints, GeometricPolicyKeepsPowersOfTwo) {
  const TrainingSet ts = RandomSet(20, 12, 3);
  DPGDConfig cfg;
  cfg.eta = 0.01;
  cfg.steps = 20;
  cfg.checkpoint_policy = CheckpointPolicy::kGeometric;
  Rng rng = MakeRng(3, 5);
  const Trajectory traj = RunDpGd(cfg, ts, rng);
  const std::vector<std::int64_t> want = {0, 1, 2, 4, 8, 16, 20};
  EXPECT_EQ(traj.checkpoint_steps, want);
  EXPECT_EQ(traj.train_loss.size(), 21u);
}

TEST(TrajectorySummary, CsvHeader) {
  const TrainingSet ts = RandomSet(20, 12, 3);
  DPGDConfig cfg;
  cfg.eta = 0.01;
  cfg.steps = 2;
  Rng rng = MakeRng(3, 5);
  std::ostringstream os;
  WriteTrajectorySummary(RunDpGd(cfg, ts, rng), os);
  EXPECT_EQ(os.str().substr(0, os.str().find('\n')),
            "step,train_loss,clip_fraction,theta_norm");
}

}  // namespace
}  // namespace dpflow
