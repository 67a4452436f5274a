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

#include "dpflow/ou_gf.h"

#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "dpflow/dp_gd.h"
#include "dpflow/errors.h"
#include "dpflow/rf_model.h"
#include "test_util.h"

namespace dpflow {
namespace {

using testing::Golden;
using testing::MaxRelDiff;
using testing::ToMatrix;
using testing::ToVector;

const nlohmann::json& Fixed() { return Golden()["fixed_problem"]; }

TEST(Decompose, WideFixedProblemMatchesGolden) {
  const Eigen::MatrixXd phi = ToMatrix(Fixed()["features"]);
  const Eigen::VectorXd y = ToVector(Fixed()["labels"]);
  const SpectralDecomp sd = Decompose(phi);
  EXPECT_EQ(sd.num_samples(), 6);
  EXPECT_EQ(sd.num_features(), 9);
  EXPECT_LE(MaxRelDiff(sd.eigvals_K, ToVector(Fixed()["kernel_eigenvalues"])),
            1e-12);
  EXPECT_LE(MaxRelDiff(PseudoinverseSolve(sd, y),
                       ToVector(Fixed()["pseudoinverse_solution"])),
            1e-11);
  EXPECT_LE(MaxRelDiff(GradientFlow(Fixed()["flow_time"], sd, y),
                       ToVector(Fixed()["gradient_flow"])),
            1e-11);
}

TEST(Decompose, ReconstructsTallAndWideMatrices) {
  const Eigen::MatrixXd wide = ToMatrix(Fixed()["features"]);
  for (const Eigen::MatrixXd& phi : {wide, Eigen::MatrixXd(wide.transpose())}) {
    const SpectralDecomp sd = Decompose(phi);
    const Eigen::MatrixXd back = sd.left_vectors *
                                 sd.singular_values.asDiagonal() *
                                 sd.right_vectors.transpose();
    EXPECT_LE(MaxRelDiff(back, phi), 1e-13);
    const Eigen::Index m = sd.singular_values.size();
    EXPECT_LE(MaxRelDiff(sd.left_vectors.transpose() * sd.left_vectors,
                         Eigen::MatrixXd::Identity(m, m)),
              1e-13);
    EXPECT_LE(MaxRelDiff(sd.right_vectors.transpose() * sd.right_vectors,
                         Eigen::MatrixXd::Identity(m, m)),
              1e-13);
    EXPECT_EQ(sd.eigvals_K.size(), phi.rows());
  }
}

TEST(Decompose, TallPseudoinverseIsLeastSquares) {
  const Eigen::MatrixXd phi = ToMatrix(Fixed()["features"]).transpose();
  Eigen::VectorXd y(9);
  y << 1, -1, 1, 1, -1, -1, 1, 1, -1;
  const SpectralDecomp sd = Decompose(phi);
  const Eigen::VectorXd want = phi.completeOrthogonalDecomposition().solve(y);
  EXPECT_LE(MaxRelDiff(PseudoinverseSolve(sd, y), want), 1e-11);
  EXPECT_EQ(sd.lambda_min(), sd.eigvals_K[8]);
  EXPECT_NEAR(sd.lambda_min(), 0.0, 1e-12);
}

TEST(Decompose, RankDeficientColumnsAreDropped) {
  Eigen::MatrixXd phi = ToMatrix(Fixed()["features"]);
  phi.row(5) = phi.row(0) + phi.row(1);
  const SpectralDecomp sd = Decompose(phi);
  EXPECT_EQ(sd.rank, 5);
  EXPECT_TRUE(PseudoinverseSolve(sd, ToVector(Fixed()["labels"])).allFinite());
}

TEST(GradientFlow, LimitsAreZeroAndPseudoinverse) {
  const SpectralDecomp sd = Decompose(ToMatrix(Fixed()["features"]));
  const Eigen::VectorXd y = ToVector(Fixed()["labels"]);
  EXPECT_EQ(GradientFlow(0.0, sd, y), Eigen::VectorXd::Zero(9));
  EXPECT_LE(MaxRelDiff(GradientFlow(1e6, sd, y), PseudoinverseSolve(sd, y)),
            1e-10);
}

TEST(GradientFlow, MatchesSmallStepGd) {
  const Eigen::MatrixXd phi = ToMatrix(Fixed()["features"]);
  const Eigen::VectorXd y = ToVector(Fixed()["labels"]);
  const SpectralDecomp sd = Decompose(phi);
  DPGDConfig cfg;
  cfg.eta = 1e-4;
  cfg.steps = 5000;
  cfg.checkpoint_policy = CheckpointPolicy::kGeometric;
  const Trajectory traj = RunGd(cfg, MakeTrainingSet(phi, y));
  EXPECT_LE(MaxRelDiff(traj.final_theta(), GradientFlow(0.5, sd, y)), 1e-3);
}

TEST(OuModeVariance, Limits) {
  EXPECT_DOUBLE_EQ(OuModeVariance(0.0, 2.0, 3.0), 12.0);
  EXPECT_NEAR(OuModeVariance(0.5, 2.0, 1e3), 4.0, 1e-12);
  EXPECT_NEAR(OuModeVariance(1e-12, 2.0, 3.0), 12.0, 1e-9);
  EXPECT_NEAR(OuModeVariance(0.3, 1.5, 2.0),
              1.5 * 1.5 / 0.6 * (1 - std::exp(-1.2)), 1e-14);
}

TEST(OuSample, MomentsMatchClosedForm) {
  const Eigen::MatrixXd phi = ToMatrix(Fixed()["features"]);
  const Eigen::VectorXd y = ToVector(Fixed()["labels"]);
  const SpectralDecomp sd = Decompose(phi);
  const double t = 0.4, Sigma = 0.3;
  Rng rng = MakeRng(2, 8);
  const int draws = 20000;
  const Eigen::VectorXd probe = phi.row(2).transpose();
  const double mean = probe.dot(GradientFlow(t, sd, y));
  const double var = FluctuationVariance(probe, sd, Sigma, t);
  double s1 = 0.0, s2 = 0.0;
  for (int k = 0; k < draws; ++k) {
    const double v = probe.dot(OuSample(t, sd, y, Sigma, rng));
    s1 += v;
    s2 += v * v;
  }
  const double emp_mean = s1 / draws;
  const double emp_var = s2 / draws - emp_mean * emp_mean;
  EXPECT_NEAR(emp_mean, mean, 5 * std::sqrt(var / draws));
  EXPECT_NEAR(emp_var / var, 1.0, 0.05);
}

TEST(OuSample, ComplementVarianceIsBrownian) {
  const Eigen::MatrixXd phi = ToMatrix(Fixed()["features"]);
  const SpectralDecomp sd = Decompose(phi);
  Eigen::VectorXd probe = Eigen::VectorXd::Ones(9);
  probe -= sd.row_basis() * (sd.row_basis().transpose() * probe);
  EXPECT_NEAR(FluctuationVariance(probe, sd, 0.5, 2.0),
              0.25 * 2.0 * probe.squaredNorm(), 1e-12);
}

TEST(BrownianPath, StrideAndEndpoint) {
  Rng rng = MakeRng(1, 1);
  const BrownianPath path = MakeBrownianPath(4, 0.01, 64, rng);
  EXPECT_EQ(PathStride(path, 0.64, 0.08), 8);
  EXPECT_THROW(PathStride(path, 0.64, 0.015), PathLengthError);
  EXPECT_THROW(PathStride(path, 1.28, 0.08), PathLengthError);
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(4);
  for (Eigen::Index b = 0; b < 8; ++b) sum += path.Increment(b, 8);
  EXPECT_LE((sum - path.EndPoint(64)).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(EulerMaruyama, ConvergesToOuOnSharedPath) {
  const Eigen::MatrixXd phi = ToMatrix(Fixed()["features"]);
  const Eigen::VectorXd y = ToVector(Fixed()["labels"]);
  const TrainingSet ts = MakeTrainingSet(phi, y);
  const SpectralDecomp sd = Decompose(phi);
  const double tau = 0.5, Sigma = 0.2;
  const double eta = 0.05;
  Rng rng = MakeRng(5, 5);
  const BrownianPath path = MakeBrownianPath(9, eta / 256, 2560, rng);
  const Eigen::VectorXd ref = OuOnPath(tau, sd, y, Sigma, path);
  double prev = std::numeric_limits<double>::infinity();
  for (double h : {eta, eta / 2, eta / 4, eta / 8}) {
    const double err =
        (EulerMaruyama(tau, h, ts, Sigma, kNoClip, path) - ref).norm();
    EXPECT_LT(err, prev);
    prev = err;
  }
  EXPECT_LT(prev, 0.05 * ref.norm());
}

TEST(Risk, IdenticalParametersHaveZeroExcess) {
  const Dataset ds = SampleData(30, 5, 3);
  const FeatureMap fm = InitFeatures(40, 5, 3);
  Rng rng = MakeRng(3, 4);
  const Eigen::VectorXd theta = 0.1 * GaussianVector(40, rng);
  Rng test_rng = MakeRng(3, 5);
  const RiskReport r = ExcessRisk(theta, theta, fm, *ds.teacher, 500, test_rng);
  EXPECT_EQ(r.excess, 0.0);
  EXPECT_EQ(r.stderr_excess, 0.0);
  EXPECT_EQ(r.test_count, 500);
  EXPECT_GT(r.risk_private, 0.0);
  Rng again = MakeRng(3, 5);
  EXPECT_THROW(ExcessRisk(theta, theta, fm, *ds.teacher, 99, again),
               ConfigError);
}

TEST(Risk, ZeroParameterLossIsOne) {
  const Dataset ds = SampleData(30, 5, 3);
  const FeatureMap fm = InitFeatures(40, 5, 3);
  Rng rng = MakeRng(3, 6);
  const TestSet test = MakeTestSet(*ds.teacher, 300, rng);
  const Eigen::MatrixXd loss =
      TestLosses(fm, test, {Eigen::VectorXd::Zero(40)});
  EXPECT_EQ(loss.col(0).mean(), 1.0);
}

TEST(Risk, CsvHeader) {
  std::ostringstream os;
  WriteRiskCsvHeader(os);
  EXPECT_EQ(os.str(),
            "risk_private,stderr_p,risk_baseline,stderr_b,excess,m,seed\n");
}

}  // namespace
}  // namespace dpflow
