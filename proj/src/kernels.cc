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

#include "dpflow/kernels.h"

#include <algorithm>
#include <cmath>

#include "dpflow/errors.h"

namespace dpflow {

double NormalizedHermite(int order, double z) {
  if (order == 0) return 1.0;
  double prev = 1.0;
  double cur = z;
  for (int l = 1; l < order; ++l) {
    const double next = (z * cur - std::sqrt(static_cast<double>(l)) * prev) /
                        std::sqrt(static_cast<double>(l + 1));
    prev = cur;
    cur = next;
  }
  return cur;
}

double Activation::operator()(double z) const {
  switch (kind) {
    case ActivationKind::kTanh:
      return std::tanh(z);
    case ActivationKind::kIdentity:
      return z;
    case ActivationKind::kHermite: {
      double sum = 0.0;
      double prev = 0.0;
      double cur = 1.0;
      for (std::size_t l = 0; l < hermite.size(); ++l) {
        sum += hermite[l] * cur;
        const double next =
            (z * cur - std::sqrt(static_cast<double>(l)) * prev) /
            std::sqrt(static_cast<double>(l + 1));
        prev = cur;
        cur = next;
      }
      return sum;
    }
  }
  return 0.0;
}

std::string Activation::Name() const {
  switch (kind) {
    case ActivationKind::kTanh:
      return "tanh";
    case ActivationKind::kIdentity:
      return "identity";
    case ActivationKind::kHermite:
      return "hermite";
  }
  return "unknown";
}

Activation ParseActivation(const std::string& name) {
  if (name == "tanh") return Activation::Tanh();
  if (name == "identity") return Activation::Identity();
  throw ConfigError("unknown activation '" + name + "'");
}

namespace kernels {
namespace {

constexpr Eigen::Index kRowBlock = 32;
constexpr Eigen::Index kColBlock = 256;

Eigen::Index NumBlocks(Eigen::Index size, Eigen::Index block) {
  return (size + block - 1) / block;
}

void ApplyInPlace(const Activation& act, double* data, Eigen::Index size) {
  if (act.kind == ActivationKind::kIdentity) return;
  if (act.kind == ActivationKind::kTanh) {
    for (Eigen::Index k = 0; k < size; ++k) data[k] = std::tanh(data[k]);
    return;
  }
  for (Eigen::Index k = 0; k < size; ++k) data[k] = act(data[k]);
}

}  // namespace

Eigen::MatrixXd FeatureMatrix(const Eigen::MatrixXd& inputs,
                              const Eigen::MatrixXd& weights,
                              const Activation& act) {
  if (inputs.cols() != weights.cols()) {
    throw DimensionError("FeatureMatrix: input dimension mismatch");
  }
  const Eigen::Index n = inputs.rows();
  const Eigen::Index p = weights.rows();
  Eigen::MatrixXd out(n, p);
  const Eigen::Index blocks = NumBlocks(p, kColBlock);
#pragma omp parallel for schedule(static)
  for (Eigen::Index b = 0; b < blocks; ++b) {
    const Eigen::Index j0 = b * kColBlock;
    const Eigen::Index len = std::min(kColBlock, p - j0);
    out.middleCols(j0, len).noalias() =
        inputs * weights.middleRows(j0, len).transpose();
    ApplyInPlace(act, out.middleCols(j0, len).data(), n * len);
  }
  return out;
}

Eigen::MatrixXd Gram(const Eigen::MatrixXd& features) {
  const Eigen::Index n = features.rows();
  Eigen::MatrixXd out(n, n);
  const Eigen::Index blocks = NumBlocks(n, kRowBlock);
  // Upper-triangular tiles only; the lower triangle is mirrored afterwards.
#pragma omp parallel for schedule(dynamic)
  for (Eigen::Index bi = 0; bi < blocks; ++bi) {
    const Eigen::Index i0 = bi * kRowBlock;
    const Eigen::Index li = std::min(kRowBlock, n - i0);
    for (Eigen::Index bj = bi; bj < blocks; ++bj) {
      const Eigen::Index j0 = bj * kRowBlock;
      const Eigen::Index lj = std::min(kRowBlock, n - j0);
      out.block(i0, j0, li, lj).noalias() =
          features.middleRows(i0, li) * features.middleRows(j0, lj).transpose();
    }
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = j + 1; i < n; ++i) out(i, j) = out(j, i);
  }
  return out;
}

Eigen::VectorXd MatVec(const Eigen::MatrixXd& features,
                       const Eigen::VectorXd& theta) {
  if (features.cols() != theta.size()) {
    throw DimensionError("MatVec: parameter dimension mismatch");
  }
  const Eigen::Index n = features.rows();
  Eigen::VectorXd out(n);
  const Eigen::Index blocks = NumBlocks(n, kRowBlock);
#pragma omp parallel for schedule(static)
  for (Eigen::Index b = 0; b < blocks; ++b) {
    const Eigen::Index i0 = b * kRowBlock;
    const Eigen::Index len = std::min(kRowBlock, n - i0);
    out.segment(i0, len).noalias() = features.middleRows(i0, len) * theta;
  }
  return out;
}

Eigen::VectorXd MatTVec(const Eigen::MatrixXd& features,
                        const Eigen::VectorXd& coeffs) {
  if (features.rows() != coeffs.size()) {
    throw DimensionError("MatTVec: sample dimension mismatch");
  }
  const Eigen::Index p = features.cols();
  Eigen::VectorXd out(p);
#pragma omp parallel for schedule(static)
  for (Eigen::Index j = 0; j < p; ++j) out[j] = features.col(j).dot(coeffs);
  return out;
}

Eigen::VectorXd RowNorms(const Eigen::MatrixXd& features) {
  const Eigen::Index n = features.rows();
  Eigen::VectorXd out(n);
#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 0; i < n; ++i) out[i] = features.row(i).norm();
  return out;
}

namespace serial {

Eigen::MatrixXd FeatureMatrix(const Eigen::MatrixXd& inputs,
                              const Eigen::MatrixXd& weights,
                              const Activation& act) {
  if (inputs.cols() != weights.cols()) {
    throw DimensionError("FeatureMatrix: input dimension mismatch");
  }
  const Eigen::Index n = inputs.rows();
  const Eigen::Index p = weights.rows();
  const Eigen::Index d = inputs.cols();
  Eigen::MatrixXd out(n, p);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) {
      double pre = 0.0;
      for (Eigen::Index k = 0; k < d; ++k) pre += weights(j, k) * inputs(i, k);
      out(i, j) = act(pre);
    }
  }
  return out;
}

Eigen::MatrixXd Gram(const Eigen::MatrixXd& features) {
  const Eigen::Index n = features.rows();
  const Eigen::Index p = features.cols();
  Eigen::MatrixXd out(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      double acc = 0.0;
      for (Eigen::Index k = 0; k < p; ++k) acc += features(i, k) * features(j, k);
      out(i, j) = acc;
    }
  }
  return out;
}

Eigen::VectorXd MatVec(const Eigen::MatrixXd& features,
                       const Eigen::VectorXd& theta) {
  if (features.cols() != theta.size()) {
    throw DimensionError("MatVec: parameter dimension mismatch");
  }
  Eigen::VectorXd out = Eigen::VectorXd::Zero(features.rows());
  for (Eigen::Index i = 0; i < features.rows(); ++i) {
    for (Eigen::Index j = 0; j < features.cols(); ++j) {
      out[i] += features(i, j) * theta[j];
    }
  }
  return out;
}

Eigen::VectorXd MatTVec(const Eigen::MatrixXd& features,
                        const Eigen::VectorXd& coeffs) {
  if (features.rows() != coeffs.size()) {
    throw DimensionError("MatTVec: sample dimension mismatch");
  }
  Eigen::VectorXd out = Eigen::VectorXd::Zero(features.cols());
  for (Eigen::Index j = 0; j < features.cols(); ++j) {
    for (Eigen::Index i = 0; i < features.rows(); ++i) {
      out[j] += features(i, j) * coeffs[i];
    }
  }
  return out;
}

Eigen::VectorXd RowNorms(const Eigen::MatrixXd& features) {
  Eigen::VectorXd out(features.rows());
  for (Eigen::Index i = 0; i < features.rows(); ++i) {
    double acc = 0.0;
    for (Eigen::Index j = 0; j < features.cols(); ++j) {
      acc += features(i, j) * features(i, j);
    }
    out[i] = std::sqrt(acc);
  }
  return out;
}

}  // namespace serial
}  // namespace kernels
}  // namespace dpflow
