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

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <string>

#include <Eigen/QR>
#include <Eigen/SVD>

#include "dpflow/errors.h"
#include "dpflow/kernels.h"

namespace dpflow {
namespace {

constexpr Eigen::Index kTestChunk = 512;

// Right-space coordinates of Y: (u_k . Y) / s_k for the first `rank` modes.
Eigen::VectorXd LimitCoefficients(const SpectralDecomp& sd,
                                  const Eigen::VectorXd& labels) {
  if (labels.size() != sd.num_samples()) {
    throw DimensionError("labels have the wrong length for this decomposition");
  }
  const Eigen::Index r = sd.rank;
  Eigen::VectorXd coeffs = sd.left_vectors.leftCols(r).transpose() * labels;
  return coeffs.cwiseQuotient(sd.singular_values.head(r));
}

}  // namespace

double SpectralDecomp::drift_rate(Eigen::Index k) const {
  return 2.0 * eigvals_K[k] / static_cast<double>(num_samples());
}

SpectralDecomp Decompose(const Eigen::MatrixXd& features, double rank_tol) {
  const Eigen::Index n = features.rows();
  const Eigen::Index p = features.cols();
  const Eigen::Index m = std::min(n, p);
  const bool wide = p >= n;
  // QR of the tall orientation: tall = Q R with R m x m.
  const Eigen::MatrixXd tall = wide ? Eigen::MatrixXd(features.transpose())
                                    : features;
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(tall);
  const Eigen::MatrixXd r_factor =
      qr.matrixQR().topRows(m).triangularView<Eigen::Upper>();
  Eigen::BDCSVD<Eigen::MatrixXd> svd(r_factor,
                                     Eigen::ComputeFullU | Eigen::ComputeFullV);
  if (svd.info() != Eigen::Success) {
    throw NumericError("Decompose: SVD did not converge");
  }
  const Eigen::MatrixXd q_thin =
      qr.householderQ() * Eigen::MatrixXd::Identity(tall.rows(), m);

  SpectralDecomp sd;
  sd.rank_tol = rank_tol;
  sd.singular_values = svd.singularValues();
  if (wide) {
    // Phi = R^T Q^T = V_R S U_R^T Q^T.
    sd.left_vectors = svd.matrixV();
    sd.right_vectors = q_thin * svd.matrixU();
  } else {
    // Phi = Q R = Q U_R S V_R^T.
    sd.left_vectors = q_thin * svd.matrixU();
    sd.right_vectors = svd.matrixV();
  }
  sd.eigvals_K = Eigen::VectorXd::Zero(n);
  sd.eigvals_K.head(m) = sd.singular_values.array().square();
  const double s_max = m > 0 ? sd.singular_values[0] : 0.0;
  sd.rank = 0;
  while (sd.rank < m && sd.singular_values[sd.rank] > rank_tol * s_max) {
    ++sd.rank;
  }
  return sd;
}

SpectralDecomp Decompose(const FeatureMap& fm, const Dataset& ds,
                         double rank_tol) {
  return Decompose(FeatureMatrix(fm, ds.inputs), rank_tol);
}

Eigen::VectorXd PseudoinverseSolve(const SpectralDecomp& sd,
                                   const Eigen::VectorXd& labels) {
  return sd.row_basis() * LimitCoefficients(sd, labels);
}

Eigen::VectorXd GradientFlow(double t, const SpectralDecomp& sd,
                             const Eigen::VectorXd& labels) {
  if (!(t >= 0.0)) throw ConfigError("GradientFlow: t must be >= 0");
  Eigen::VectorXd coeffs = LimitCoefficients(sd, labels);
  for (Eigen::Index k = 0; k < sd.rank; ++k) {
    coeffs[k] *= -std::expm1(-sd.drift_rate(k) * t);
  }
  return sd.row_basis() * coeffs;
}

double OuModeVariance(double rate, double Sigma, double t) {
  if (rate <= 0.0) return Sigma * Sigma * t;
  return Sigma * Sigma * (-std::expm1(-2.0 * rate * t)) / (2.0 * rate);
}

OuState SampleOuState(double t, const SpectralDecomp& sd,
                      const Eigen::VectorXd& labels, double Sigma, Rng& rng) {
  if (!(t >= 0.0)) throw ConfigError("SampleOuState: t must be >= 0");
  if (!(Sigma >= 0.0)) throw ConfigError("SampleOuState: Sigma must be >= 0");
  const Eigen::VectorXd limit = LimitCoefficients(sd, labels);
  std::normal_distribution<double> normal(0.0, 1.0);
  OuState state;
  state.row_coeffs.resize(sd.rank);
  for (Eigen::Index k = 0; k < sd.rank; ++k) {
    const double rate = sd.drift_rate(k);
    const double mean = -std::expm1(-rate * t) * limit[k];
    const double sd_k = std::sqrt(OuModeVariance(rate, Sigma, t));
    state.row_coeffs[k] = mean + sd_k * normal(rng);
  }
  state.complement_variance = Sigma * Sigma * t;
  return state;
}

Eigen::VectorXd Materialize(const OuState& state, const SpectralDecomp& sd,
                            Rng& rng) {
  const auto basis = sd.row_basis();
  Eigen::VectorXd out = basis * state.row_coeffs;
  if (state.complement_variance > 0.0) {
    Eigen::VectorXd w = GaussianVector(sd.num_features(), rng);
    const Eigen::VectorXd along = basis.transpose() * w;
    w.noalias() -= basis * along;
    out += std::sqrt(state.complement_variance) * w;
  }
  return out;
}

Eigen::VectorXd OuSample(double t, const SpectralDecomp& sd,
                         const Eigen::VectorXd& labels, double Sigma,
                         Rng& rng) {
  const OuState state = SampleOuState(t, sd, labels, Sigma, rng);
  return Materialize(state, sd, rng);
}

double FluctuationVariance(const Eigen::VectorXd& phi, const SpectralDecomp& sd,
                           double Sigma, double t) {
  if (phi.size() != sd.num_features()) {
    throw DimensionError("FluctuationVariance: feature dimension mismatch");
  }
  const Eigen::VectorXd proj = sd.row_basis().transpose() * phi;
  double var = 0.0;
  for (Eigen::Index k = 0; k < sd.rank; ++k) {
    var += proj[k] * proj[k] * OuModeVariance(sd.drift_rate(k), Sigma, t);
  }
  const double complement = std::max(0.0, phi.squaredNorm() - proj.squaredNorm());
  return var + complement * Sigma * Sigma * t;
}

double TestFluctuationVariance(const Eigen::VectorXd& x, const FeatureMap& fm,
                               const SpectralDecomp& sd, double Sigma,
                               double t) {
  return FluctuationVariance(Featurize(fm, x), sd, Sigma, t);
}

Eigen::VectorXd BrownianPath::Increment(Eigen::Index block,
                                        Eigen::Index stride) const {
  return increments.middleCols(block * stride, stride).rowwise().sum();
}

Eigen::VectorXd BrownianPath::EndPoint(Eigen::Index fine_steps) const {
  return increments.leftCols(fine_steps).rowwise().sum();
}

BrownianPath MakeBrownianPath(Eigen::Index p, double dt, Eigen::Index steps,
                              Rng& rng) {
  if (!(dt > 0.0) || steps < 1) {
    throw ConfigError("Brownian path needs dt > 0 and at least one step");
  }
  BrownianPath path;
  path.dt = dt;
  path.increments.resize(p, steps);
  std::normal_distribution<double> normal(0.0, std::sqrt(dt));
  for (Eigen::Index j = 0; j < steps; ++j) {
    for (Eigen::Index i = 0; i < p; ++i) path.increments(i, j) = normal(rng);
  }
  return path;
}

Eigen::Index PathStride(const BrownianPath& path, double tau, double eta) {
  const double ratio = eta / path.dt;
  const auto stride = static_cast<Eigen::Index>(std::llround(ratio));
  if (stride < 1 || std::abs(ratio - static_cast<double>(stride)) > 1e-9 * ratio) {
    throw PathLengthError("step " + std::to_string(eta) +
                          " is not a multiple of the path resolution " +
                          std::to_string(path.dt));
  }
  const auto steps = static_cast<Eigen::Index>(std::llround(tau / eta));
  if (steps * stride > path.steps()) {
    throw PathLengthError("Brownian path too short: need " +
                          std::to_string(steps * stride) + " increments, have " +
                          std::to_string(path.steps()));
  }
  return stride;
}

Eigen::VectorXd EulerMaruyama(double tau, double eta, const TrainingSet& ts,
                              double Sigma, double c_clip,
                              const BrownianPath& path) {
  if (!(eta > 0.0)) throw ConfigError("EulerMaruyama: eta must be > 0");
  if (path.increments.rows() != ts.num_features()) {
    throw DimensionError("Brownian path dimension differs from p");
  }
  const Eigen::Index stride = PathStride(path, tau, eta);
  const auto steps = static_cast<Eigen::Index>(std::llround(tau / eta));
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(ts.num_features());
  for (Eigen::Index b = 0; b < steps; ++b) {
    theta -= eta * ClippedGradient(ts, theta, c_clip);
    if (Sigma != 0.0) theta += Sigma * path.Increment(b, stride);
  }
  return theta;
}

Eigen::VectorXd OuOnPath(double tau, const SpectralDecomp& sd,
                         const Eigen::VectorXd& labels, double Sigma,
                         const BrownianPath& path) {
  if (path.increments.rows() != sd.num_features()) {
    throw DimensionError("Brownian path dimension differs from p");
  }
  const auto fine = static_cast<Eigen::Index>(std::llround(tau / path.dt));
  if (fine > path.steps()) throw PathLengthError("Brownian path too short");
  const auto basis = sd.row_basis();
  const Eigen::VectorXd limit = LimitCoefficients(sd, labels);
  const Eigen::MatrixXd projected =
      basis.transpose() * path.increments.leftCols(fine);
  const double dt = path.dt;
  Eigen::VectorXd coeffs(sd.rank);
  for (Eigen::Index k = 0; k < sd.rank; ++k) {
    const double rate = sd.drift_rate(k);
    const double decay = std::exp(-rate * dt);
    const double gain = rate * dt > 0.0 ? -std::expm1(-rate * dt) / (rate * dt) : 1.0;
    double c = 0.0;
    for (Eigen::Index j = 0; j < fine; ++j) {
      c = limit[k] + decay * (c - limit[k]) + Sigma * gain * projected(k, j);
    }
    coeffs[k] = c;
  }
  Eigen::VectorXd out = basis * coeffs;
  if (Sigma != 0.0) {
    Eigen::VectorXd end = path.EndPoint(fine);
    const Eigen::VectorXd along = basis.transpose() * end;
    end.noalias() -= basis * along;
    out += Sigma * end;
  }
  return out;
}

TestSet MakeTestSet(const Eigen::VectorXd& teacher, Eigen::Index m, Rng& rng) {
  TestSet test;
  test.inputs = SampleInputs(m, teacher.size(), rng);
  test.labels = TeacherLabels(test.inputs, teacher);
  return test;
}

Eigen::MatrixXd TestLosses(const FeatureMap& fm, const TestSet& test,
                           const std::vector<Eigen::VectorXd>& thetas) {
  const Eigen::Index p = fm.num_features();
  Eigen::MatrixXd params(p, static_cast<Eigen::Index>(thetas.size()));
  for (std::size_t c = 0; c < thetas.size(); ++c) {
    if (thetas[c].size() != p) {
      throw DimensionError("TestLosses: parameter vector has wrong dimension");
    }
    params.col(static_cast<Eigen::Index>(c)) = thetas[c];
  }
  const Eigen::Index m = test.size();
  Eigen::MatrixXd losses(m, params.cols());
  for (Eigen::Index i0 = 0; i0 < m; i0 += kTestChunk) {
    const Eigen::Index len = std::min(kTestChunk, m - i0);
    const Eigen::MatrixXd phi = kernels::FeatureMatrix(
        test.inputs.middleRows(i0, len), fm.weights, fm.activation);
    Eigen::MatrixXd preds = phi * params;
    preds.colwise() -= test.labels.segment(i0, len);
    losses.middleRows(i0, len) = preds.array().square().matrix();
  }
  return losses;
}

RiskReport PairedRisk(const Eigen::VectorXd& losses_private,
                      const Eigen::VectorXd& losses_baseline) {
  if (losses_private.size() != losses_baseline.size() ||
      losses_private.size() < 2) {
    throw DimensionError("PairedRisk needs two equal-length loss vectors");
  }
  const auto m = static_cast<double>(losses_private.size());
  auto stderr_of = [m](const Eigen::VectorXd& v, double mean) {
    const double ss = (v.array() - mean).square().sum();
    return std::sqrt(ss / (m - 1.0)) / std::sqrt(m);
  };
  RiskReport r;
  r.test_count = losses_private.size();
  r.risk_private = losses_private.mean();
  r.risk_baseline = losses_baseline.mean();
  r.stderr_private = stderr_of(losses_private, r.risk_private);
  r.stderr_baseline = stderr_of(losses_baseline, r.risk_baseline);
  r.excess = r.risk_private - r.risk_baseline;
  const Eigen::VectorXd diff = losses_private - losses_baseline;
  r.stderr_excess = stderr_of(diff, diff.mean());
  return r;
}

RiskReport ExcessRisk(const Eigen::VectorXd& theta_private,
                      const Eigen::VectorXd& theta_baseline,
                      const FeatureMap& fm, const Eigen::VectorXd& teacher,
                      Eigen::Index m, Rng& rng) {
  if (m < 100) throw ConfigError("ExcessRisk needs at least 100 test points");
  const TestSet test = MakeTestSet(teacher, m, rng);
  const Eigen::MatrixXd losses =
      TestLosses(fm, test, {theta_private, theta_baseline});
  return PairedRisk(losses.col(0), losses.col(1));
}

void WriteRiskCsvHeader(std::ostream& out) {
  out << "risk_private,stderr_p,risk_baseline,stderr_b,excess,m,seed\n";
}

void WriteRiskCsvRow(const RiskReport& r, std::ostream& out) {
  out << std::setprecision(17) << r.risk_private << ',' << r.stderr_private
      << ',' << r.risk_baseline << ',' << r.stderr_baseline << ',' << r.excess
      << ',' << r.test_count << ',' << r.seed << '\n';
}

}  // namespace dpflow
