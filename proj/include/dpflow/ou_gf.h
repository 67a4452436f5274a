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

#ifndef DPFLOW_OU_GF_H_
#define DPFLOW_OU_GF_H_

#include <cstdint>
#include <ostream>
#include <vector>

#include <Eigen/Core>

#include "dpflow/dp_gd.h"
#include "dpflow/rf_model.h"
#include "dpflow/rng.h"

// Closed-form dynamics of (noisy) gradient flow on the quadratic loss. Every
// formula is evaluated in the thin SVD basis of Phi; the p x p matrix
// Phi^T Phi is never formed. Off the row space the drift vanishes (theta_0 =
// 0), so the noisy flow is a plain Wiener process there.
namespace dpflow {

inline constexpr double kDefaultRankTolerance = 1e-10;

struct SpectralDecomp {
  Eigen::VectorXd singular_values;  // min(n, p), nonincreasing
  Eigen::MatrixXd right_vectors;    // p x min(n, p)
  Eigen::MatrixXd left_vectors;     // n x min(n, p)
  Eigen::VectorXd eigvals_K;        // n, nonincreasing, zero-padded
  Eigen::Index rank = 0;            // modes with s_k > rank_tol * s_max
  double rank_tol = kDefaultRankTolerance;

  Eigen::Index num_samples() const { return left_vectors.rows(); }
  Eigen::Index num_features() const { return right_vectors.rows(); }
  double lambda_max() const { return eigvals_K[0]; }
  double lambda_min() const { return eigvals_K[eigvals_K.size() - 1]; }
  // OU drift rate of mode k: 2 lambda_k / n.
  double drift_rate(Eigen::Index k) const;
  auto row_basis() const { return right_vectors.leftCols(rank); }
};

// Thin SVD of Phi via Householder QR of its longer side followed by a
// divide-and-conquer SVD of the square triangular factor. Throws
// NumericError on non-convergence.
SpectralDecomp Decompose(const Eigen::MatrixXd& features,
                         double rank_tol = kDefaultRankTolerance);
SpectralDecomp Decompose(const FeatureMap& fm, const Dataset& ds,
                         double rank_tol = kDefaultRankTolerance);

// Minimum-norm least-squares solution Phi^+ Y.
Eigen::VectorXd PseudoinverseSolve(const SpectralDecomp& sd,
                                   const Eigen::VectorXd& labels);

// Gradient flow from theta(0) = 0:
// theta(t) = sum_k v_k (1 - exp(-2 lambda_k t / n)) (u_k . Y) / s_k.
Eigen::VectorXd GradientFlow(double t, const SpectralDecomp& sd,
                             const Eigen::VectorXd& labels);

// Variance of one OU mode with drift rate `rate` after time t:
// Sigma^2 / (2 rate) (1 - exp(-2 rate t)), and Sigma^2 t when rate = 0.
double OuModeVariance(double rate, double Sigma, double t);

// Law of the noisy flow at time t, split into explicit row-space coordinates
// (in the right-singular basis) and the isotropic variance of every
// coordinate of the orthogonal complement.
struct OuState {
  Eigen::VectorXd row_coeffs;
  double complement_variance = 0.0;
};

OuState SampleOuState(double t, const SpectralDecomp& sd,
                      const Eigen::VectorXd& labels, double Sigma, Rng& rng);

// Full p-vector: row-space part plus one Gaussian draw projected off the
// row space.
Eigen::VectorXd Materialize(const OuState& state, const SpectralDecomp& sd,
                            Rng& rng);

// Exact draw of the noisy flow at time t (SampleOuState + Materialize).
Eigen::VectorXd OuSample(double t, const SpectralDecomp& sd,
                         const Eigen::VectorXd& labels, double Sigma, Rng& rng);

// Var[phi . (Theta(t) - E Theta(t))] for a feature vector phi.
double FluctuationVariance(const Eigen::VectorXd& phi, const SpectralDecomp& sd,
                           double Sigma, double t);
double TestFluctuationVariance(const Eigen::VectorXd& x, const FeatureMap& fm,
                               const SpectralDecomp& sd, double Sigma,
                               double t);

// Pre-generated Brownian increments on a fine grid; coarser schemes sum
// consecutive increments, so refinements are exactly nested.
struct BrownianPath {
  double dt = 0.0;
  Eigen::MatrixXd increments;  // p x steps, column j is B((j+1) dt) - B(j dt)

  Eigen::Index steps() const { return increments.cols(); }
  // B((block + 1) stride dt) - B(block stride dt), block counted from 0.
  Eigen::VectorXd Increment(Eigen::Index block, Eigen::Index stride) const;
  // B(fine_steps dt).
  Eigen::VectorXd EndPoint(Eigen::Index fine_steps) const;
};

BrownianPath MakeBrownianPath(Eigen::Index p, double dt, Eigen::Index steps,
                              Rng& rng);

// Number of fine increments making up one step of size eta; throws
// PathLengthError unless eta is an integer multiple of path.dt and tau / eta
// steps fit on the path.
Eigen::Index PathStride(const BrownianPath& path, double tau, double eta);

// Euler-Maruyama for dTheta = -grad L_clip(Theta) dt + Sigma dB driven by the
// shared path: the DP-GD recursion with xi_t sqrt(eta) replaced by the path
// increments. T = round(tau / eta).
Eigen::VectorXd EulerMaruyama(double tau, double eta, const TrainingSet& ts,
                              double Sigma, double c_clip,
                              const BrownianPath& path);

// Reference solution of the unclipped OU equation on the same path: exact
// mean-reversion per mode, with each fine-step stochastic integral replaced
// by its conditional expectation given the increment.
Eigen::VectorXd OuOnPath(double tau, const SpectralDecomp& sd,
                         const Eigen::VectorXd& labels, double Sigma,
                         const BrownianPath& path);

// Test inputs with teacher labels, featurized lazily in chunks.
struct TestSet {
  Eigen::MatrixXd inputs;
  Eigen::VectorXd labels;
  Eigen::Index size() const { return inputs.rows(); }
};

TestSet MakeTestSet(const Eigen::VectorXd& teacher, Eigen::Index m, Rng& rng);

// Per-point squared losses of every parameter vector on the test set:
// column c holds (phi(x_i) . thetas[c] - y_i)^2.
Eigen::MatrixXd TestLosses(const FeatureMap& fm, const TestSet& test,
                           const std::vector<Eigen::VectorXd>& thetas);

struct RiskReport {
  double risk_private = 0.0;
  double stderr_private = 0.0;
  double risk_baseline = 0.0;
  double stderr_baseline = 0.0;
  double excess = 0.0;         // risk_private - risk_baseline
  double stderr_excess = 0.0;  // of the paired differences
  std::int64_t test_count = 0;
  std::uint64_t seed = 0;
};

// Paired estimate from per-point losses of the two parameter vectors.
RiskReport PairedRisk(const Eigen::VectorXd& losses_private,
                      const Eigen::VectorXd& losses_baseline);

// Monte Carlo excess population risk on m >= 100 fresh test points; both
// parameter vectors are evaluated on the same points.
RiskReport ExcessRisk(const Eigen::VectorXd& theta_private,
                      const Eigen::VectorXd& theta_baseline,
                      const FeatureMap& fm, const Eigen::VectorXd& teacher,
                      Eigen::Index m, Rng& rng);

// Columns risk_private,stderr_p,risk_baseline,stderr_b,excess,m,seed.
void WriteRiskCsvHeader(std::ostream& out);
void WriteRiskCsvRow(const RiskReport& report, std::ostream& out);

}  // namespace dpflow

#endif  // DPFLOW_OU_GF_H_
