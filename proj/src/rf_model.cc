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

#include "dpflow/rf_model.h"

#include <cmath>
#include <iomanip>
#include <string>

#include <Eigen/Eigenvalues>

#include "dpflow/errors.h"
#include "dpflow/kernels.h"

namespace dpflow {

QuadratureRule GaussHermiteRule(int nodes) {
  if (nodes < 1) throw ConfigError("GaussHermiteRule: nodes must be >= 1");
  // Jacobi matrix of the monic probabilists' Hermite recurrence.
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(nodes, nodes);
  for (int k = 1; k < nodes; ++k) {
    const double off = std::sqrt(static_cast<double>(k));
    jacobi(k, k - 1) = off;
    jacobi(k - 1, k) = off;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(jacobi);
  if (solver.info() != Eigen::Success) {
    throw NumericError("GaussHermiteRule: eigensolver failed");
  }
  QuadratureRule rule;
  rule.nodes = solver.eigenvalues();
  rule.weights = solver.eigenvectors().row(0).transpose().array().square();
  // Enforce the exact +/- symmetry of the rule.
  for (int a = 0, b = nodes - 1; a < b; ++a, --b) {
    const double z = 0.5 * (rule.nodes[b] - rule.nodes[a]);
    const double w = 0.5 * (rule.weights[a] + rule.weights[b]);
    rule.nodes[a] = -z;
    rule.nodes[b] = z;
    rule.weights[a] = w;
    rule.weights[b] = w;
  }
  if (nodes % 2 == 1) rule.nodes[nodes / 2] = 0.0;
  rule.weights /= rule.weights.sum();
  return rule;
}

HermiteCoeffs ComputeHermiteCoeffs(const Activation& act,
                                   const HermiteOptions& opts) {
  if (opts.order < 3) throw ConfigError("Hermite order must be >= 3");
  if (opts.nodes < 4 * opts.order) {
    throw ConfigError("Hermite quadrature needs nodes >= 4 * order");
  }
  const QuadratureRule rule = GaussHermiteRule(opts.nodes);
  HermiteCoeffs out;
  out.order = opts.order;
  out.quadrature_nodes = opts.nodes;
  out.values.assign(static_cast<std::size_t>(opts.order) + 1, 0.0);

  // The rule is symmetric, so each +/- node pair is accumulated together;
  // He_l(-z) = (-1)^l He_l(z), which makes odd/even cancellations exact.
  const int m = opts.nodes;
  for (int a = 0, b = m - 1; a <= b; ++a, --b) {
    const double z = rule.nodes[b];
    const double w = rule.weights[b];
    const double f_pos = act(z);
    const double f_neg = act(-z);
    double prev = 0.0;
    double cur = 1.0;
    for (int l = 0; l <= opts.order; ++l) {
      const double paired = (l % 2 == 0) ? f_pos + f_neg : f_pos - f_neg;
      out.values[static_cast<std::size_t>(l)] +=
          a == b ? w * f_pos * cur : w * paired * cur;
      const double next = (z * cur - std::sqrt(static_cast<double>(l)) * prev) /
                          std::sqrt(static_cast<double>(l + 1));
      prev = cur;
      cur = next;
    }
    out.second_moment +=
        a == b ? w * f_pos * f_pos : w * (f_pos * f_pos + f_neg * f_neg);
  }

  if (opts.strict) {
    const double mu0 = std::abs(out.values[0]);
    const double mu1 = std::abs(out.values[1]);
    const double mu2 = std::abs(out.values[2]);
    if (mu0 > opts.tolerance || mu2 > opts.tolerance || mu1 <= opts.tolerance) {
      throw AdmissibilityError(
          "activation '" + act.Name() +
          "' is not admissible: need mu_0 = mu_2 = 0 and mu_1 != 0 (got mu_0=" +
          std::to_string(out.values[0]) + ", mu_1=" +
          std::to_string(out.values[1]) + ", mu_2=" +
          std::to_string(out.values[2]) + ")");
    }
  }
  return out;
}

Eigen::MatrixXd SampleInputs(Eigen::Index m, Eigen::Index d, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd out(m, d);
  const double target = std::sqrt(static_cast<double>(d));
  for (Eigen::Index i = 0; i < m; ++i) {
    double norm = 0.0;
    // A zero-norm draw has probability zero; resample if it ever happens.
    while (norm == 0.0) {
      for (Eigen::Index k = 0; k < d; ++k) out(i, k) = normal(rng);
      norm = out.row(i).norm();
    }
    out.row(i) *= target / norm;
  }
  return out;
}

Eigen::VectorXd SampleTeacher(Eigen::Index d, Rng& rng) {
  Eigen::VectorXd u;
  double norm = 0.0;
  while (norm == 0.0) {
    u = GaussianVector(d, rng);
    norm = u.norm();
  }
  return u / norm;
}

Eigen::VectorXd TeacherLabels(const Eigen::MatrixXd& inputs,
                              const Eigen::VectorXd& teacher) {
  if (inputs.cols() != teacher.size()) {
    throw DimensionError("TeacherLabels: teacher dimension mismatch");
  }
  const Eigen::VectorXd proj = inputs * teacher;
  return proj.unaryExpr([](double v) { return v >= 0.0 ? 1.0 : -1.0; });
}

Dataset SampleData(Eigen::Index n, Eigen::Index d, std::uint64_t seed) {
  if (n < 1) throw ConfigError("SampleData: n must be >= 1");
  if (d < 2) throw ConfigError("SampleData: d must be >= 2");
  Rng teacher_rng = MakeRng(seed, Stream::kTeacher);
  Rng input_rng = MakeRng(seed, Stream::kTrainInputs);
  Dataset ds;
  ds.seed = seed;
  ds.teacher = SampleTeacher(d, teacher_rng);
  ds.inputs = SampleInputs(n, d, input_rng);
  ds.labels = TeacherLabels(ds.inputs, *ds.teacher);
  return ds;
}

FeatureMap InitFeatures(Eigen::Index p, Eigen::Index d, std::uint64_t seed,
                        const Activation& act, const HermiteOptions& opts) {
  if (p < 1) throw ConfigError("InitFeatures: p must be >= 1");
  if (d < 1) throw ConfigError("InitFeatures: d must be >= 1");
  Rng rng = MakeRng(seed, Stream::kFeatures);
  FeatureMap fm;
  fm.seed = seed;
  fm.activation = act;
  fm.weights = GaussianMatrix(p, d, 1.0 / std::sqrt(static_cast<double>(d)), rng);
  fm.hermite = ComputeHermiteCoeffs(act, opts);
  return fm;
}

Eigen::VectorXd Featurize(const FeatureMap& fm, const Eigen::VectorXd& x) {
  if (x.size() != fm.input_dim()) {
    throw DimensionError("Featurize: expected input of dimension " +
                         std::to_string(fm.input_dim()) + ", got " +
                         std::to_string(x.size()));
  }
  Eigen::VectorXd pre = fm.weights * x;
  for (Eigen::Index j = 0; j < pre.size(); ++j) pre[j] = fm.activation(pre[j]);
  return pre;
}

Eigen::MatrixXd FeatureMatrix(const FeatureMap& fm,
                              const Eigen::MatrixXd& inputs) {
  return kernels::FeatureMatrix(inputs, fm.weights, fm.activation);
}

Eigen::MatrixXd Kernel(const FeatureMap& fm, const Dataset& ds) {
  return kernels::Gram(FeatureMatrix(fm, ds.inputs));
}

void WriteDatasetCsv(const Dataset& ds, std::ostream& out) {
  const Eigen::Index d = ds.dim();
  for (Eigen::Index k = 0; k < d; ++k) out << "x_" << (k + 1) << ',';
  out << "y\n";
  out << std::setprecision(17);
  for (Eigen::Index i = 0; i < ds.size(); ++i) {
    for (Eigen::Index k = 0; k < d; ++k) out << ds.inputs(i, k) << ',';
    out << ds.labels[i] << '\n';
  }
}

}  // namespace dpflow
