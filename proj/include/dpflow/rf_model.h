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

#ifndef DPFLOW_RF_MODEL_H_
#define DPFLOW_RF_MODEL_H_

#include <cstdint>
#include <optional>
#include <ostream>
#include <vector>

#include <Eigen/Core>

#include "dpflow/activation.h"
#include "dpflow/rng.h"

namespace dpflow {

// Training inputs (one sample per row, each row of norm sqrt(d)), labels and
// the optional teacher direction that generated them.
struct Dataset {
  Eigen::MatrixXd inputs;
  Eigen::VectorXd labels;
  std::optional<Eigen::VectorXd> teacher;
  std::uint64_t seed = 0;

  Eigen::Index size() const { return inputs.rows(); }
  Eigen::Index dim() const { return inputs.cols(); }
};

// mu_l = E[act(rho) He_l(rho)] / sqrt(l!) for rho ~ N(0, 1).
struct HermiteCoeffs {
  std::vector<double> values;
  int order = 0;
  int quadrature_nodes = 0;
  // Quadrature estimate of E[act(rho)^2]; upper bound for sum mu_l^2.
  double second_moment = 0.0;

  double mu(int l) const { return values.at(static_cast<std::size_t>(l)); }
};

// Frozen random-features layer: theta -> act(V x) . theta.
struct FeatureMap {
  Eigen::MatrixXd weights;  // p x d, entries N(0, 1/d)
  Activation activation;
  HermiteCoeffs hermite;
  std::uint64_t seed = 0;

  Eigen::Index num_features() const { return weights.rows(); }
  Eigen::Index input_dim() const { return weights.cols(); }
};

struct HermiteOptions {
  int order = 12;
  int nodes = 200;
  bool strict = false;
  double tolerance = 1e-10;
};

struct QuadratureRule {
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;  // Sum to one: expectation under N(0, 1).
};

// Gauss-Hermite rule for the standard Gaussian weight (Golub-Welsch).
QuadratureRule GaussHermiteRule(int nodes);

// Throws ConfigError unless order >= 3 and nodes >= 4 * order. In strict
// mode throws AdmissibilityError when |mu_0| or |mu_2| exceeds the tolerance
// or |mu_1| does not.
HermiteCoeffs ComputeHermiteCoeffs(const Activation& act,
                                   const HermiteOptions& opts = {});

// m standard Gaussian inputs in R^d, each rescaled to norm exactly sqrt(d).
Eigen::MatrixXd SampleInputs(Eigen::Index m, Eigen::Index d, Rng& rng);

// Uniform direction on the unit sphere of R^d.
Eigen::VectorXd SampleTeacher(Eigen::Index d, Rng& rng);

// y_i = sign(u . x_i) in {-1, +1}; ties go to +1.
Eigen::VectorXd TeacherLabels(const Eigen::MatrixXd& inputs,
                              const Eigen::VectorXd& teacher);

// Synthetic task y = sign(u . x) with normalized Gaussian inputs.
Dataset SampleData(Eigen::Index n, Eigen::Index d, std::uint64_t seed);

// V with i.i.d. N(0, 1/d) entries; Hermite coefficients filled in.
FeatureMap InitFeatures(Eigen::Index p, Eigen::Index d, std::uint64_t seed,
                        const Activation& act = Activation::Tanh(),
                        const HermiteOptions& opts = {});

// act(V x). Throws DimensionError on mismatch.
Eigen::VectorXd Featurize(const FeatureMap& fm, const Eigen::VectorXd& x);

// Rows act(V x_i) for every row of `inputs`.
Eigen::MatrixXd FeatureMatrix(const FeatureMap& fm,
                              const Eigen::MatrixXd& inputs);

// K = Phi Phi^T for the training inputs.
Eigen::MatrixXd Kernel(const FeatureMap& fm, const Dataset& ds);

// Debug dump: header x_1..x_d,y then one row per sample.
void WriteDatasetCsv(const Dataset& ds, std::ostream& out);

}  // namespace dpflow

#endif  // DPFLOW_RF_MODEL_H_
