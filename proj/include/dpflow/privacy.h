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

#ifndef DPFLOW_PRIVACY_H_
#define DPFLOW_PRIVACY_H_

#include <cstdint>

namespace dpflow {

// (epsilon, delta) with delta in (0, 1) and epsilon in (0, 8 log(1/delta)).
struct PrivacyBudget {
  double epsilon = 0.0;
  double delta = 0.0;

  // Throws BudgetRangeError outside the admissible range.
  void Validate() const;
  double log_inv_delta() const;
};

// Hyper-parameters of the continuous-time analysis. The identity
// Sigma = 2 c_clip sigma / n holds by construction.
struct ScalingHyperparams {
  double tau = 0.0;      // training time eta * T
  double c_clip = 0.0;
  double Sigma = 0.0;    // diffusion coefficient of the noisy flow
  double sigma = 0.0;    // discrete noise multiplier
};

// Smallest noise multiplier certified by the moment accountant:
// sqrt(eta T) * sqrt(8 log(1/delta)) / epsilon.
double CalibrateSigma(const PrivacyBudget& budget, double eta_T);

// tau = d log^2 n / p, c_clip = sqrt(p) log^2 n,
// Sigma = (2 c_clip sqrt(tau) / n) sqrt(8 log(1/delta)) / epsilon.
ScalingHyperparams ScaledHyperparams(std::int64_t n, std::int64_t d,
                                   std::int64_t p, const PrivacyBudget& budget);

// Diffusion coefficient matching a discrete noise multiplier.
double DiffusionScale(double c_clip, double sigma, std::int64_t n);

// L2 sensitivity of one noiseless update: 2 eta c_clip / n.
double SensitivityBound(double eta, double c_clip, std::int64_t n);

// Composed log-moment bound T * eta / (2 sigma^2) * (lambda + lambda^2).
// Throws InfiniteLossError when sigma = 0 and T >= 1.
double MomentBound(double lambda, double eta, double sigma, std::int64_t T);

struct TailCheck {
  bool ok = false;
  double achieved_delta = 0.0;
  double lambda = 0.0;
  // exp(alpha(lambda) - lambda eps) with the unrelaxed moment bound.
  double direct_delta = 0.0;
};

// Relative round-off allowance when comparing achieved_delta with delta.
inline constexpr double kTailRoundoff = 1e-12;

// Tail bound at lambda* = 4 log(1/delta) / epsilon. With a = eta T/(2 sigma^2),
// the accountant chain gives exp(a lambda*^2 - lambda* eps / 2) whenever
// a <= eps / 2; beyond that the relaxation is invalid and the direct value
// exp(a (lambda* + lambda*^2) - lambda* eps) is reported (the two agree at
// a = eps / 2). ok iff achieved_delta <= delta (up to kTailRoundoff).
TailCheck VerifyTail(const PrivacyBudget& budget, double eta, double sigma,
                     std::int64_t T);

// Diagnostic: min over a log-spaced lambda grid of the direct tail value.
double OptimizedDelta(const PrivacyBudget& budget, double eta, double sigma,
                      std::int64_t T, int grid_points = 400);

}  // namespace dpflow

#endif  // DPFLOW_PRIVACY_H_
