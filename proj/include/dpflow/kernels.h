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

#ifndef DPFLOW_KERNELS_H_
#define DPFLOW_KERNELS_H_

#include <Eigen/Core>

#include "dpflow/activation.h"

// Data-parallel kernels shared by training, spectral analysis and
// evaluation. The default implementations are OpenMP-parallel; the partition
// of the work into blocks is fixed and independent of the thread count, so
// results are bit-identical for any number of threads. The `serial`
// namespace holds straightforward loop implementations kept as the test
// reference and the benchmark baseline.
namespace dpflow::kernels {

// Phi(i, j) = act(v_j . x_i) for X (n x d) and V (p x d).
Eigen::MatrixXd FeatureMatrix(const Eigen::MatrixXd& inputs,
                              const Eigen::MatrixXd& weights,
                              const Activation& act);

// K = Phi Phi^T, exactly symmetric.
Eigen::MatrixXd Gram(const Eigen::MatrixXd& features);

// Phi theta.
Eigen::VectorXd MatVec(const Eigen::MatrixXd& features,
                       const Eigen::VectorXd& theta);

// Phi^T c.
Eigen::VectorXd MatTVec(const Eigen::MatrixXd& features,
                        const Eigen::VectorXd& coeffs);

// Euclidean norm of every row.
Eigen::VectorXd RowNorms(const Eigen::MatrixXd& features);

namespace serial {

Eigen::MatrixXd FeatureMatrix(const Eigen::MatrixXd& inputs,
                              const Eigen::MatrixXd& weights,
                              const Activation& act);
Eigen::MatrixXd Gram(const Eigen::MatrixXd& features);
Eigen::VectorXd MatVec(const Eigen::MatrixXd& features,
                       const Eigen::VectorXd& theta);
Eigen::VectorXd MatTVec(const Eigen::MatrixXd& features,
                        const Eigen::VectorXd& coeffs);
Eigen::VectorXd RowNorms(const Eigen::MatrixXd& features);

}  // namespace serial
}  // namespace dpflow::kernels

#endif  // DPFLOW_KERNELS_H_
