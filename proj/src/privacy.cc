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

#include "dpflow/privacy.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "dpflow/errors.h"

namespace dpflow {

void PrivacyBudget::Validate() const {
  if (!(delta > 0.0 && delta < 1.0)) {
    throw BudgetRangeError("delta must lie in (0, 1), got " +
                           std::to_string(delta));
  }
  const double upper = 8.0 * std::log(1.0 / delta);
  if (!(epsilon > 0.0 && epsilon < upper)) {
    throw BudgetRangeError("epsilon must lie in (0, 8 log(1/delta)) = (0, " +
                           std::to_string(upper) + "), got " +
                           std::to_string(epsilon));
  }
}

double PrivacyBudget::log_inv_delta() const { return std::log(1.0 / delta); }

double CalibrateSigma(const PrivacyBudget& budget, double eta_T) {
  budget.Validate();
  if (!(eta_T >= 0.0)) throw ConfigError("eta * T must be >= 0");
  return std::sqrt(eta_T) * std::sqrt(8.0 * budget.log_inv_delta()) /
         budget.epsilon;
}

ScalingHyperparams ScaledHyperparams(std::int64_t n, std::int64_t d,
                                   std::int64_t p,
                                   const PrivacyBudget& budget) {
  if (n < 2 || d < 2 || p < 2) throw ConfigError("n, d, p must be >= 2");
  budget.Validate();
  const double log_n = std::log(static_cast<double>(n));
  const double log2_n = log_n * log_n;
  ScalingHyperparams hp;
  hp.tau = static_cast<double>(d) * log2_n / static_cast<double>(p);
  hp.c_clip = std::sqrt(static_cast<double>(p)) * log2_n;
  hp.Sigma = (2.0 * hp.c_clip * std::sqrt(hp.tau) / static_cast<double>(n)) *
             std::sqrt(8.0 * budget.log_inv_delta()) / budget.epsilon;
  hp.sigma = hp.Sigma * static_cast<double>(n) / (2.0 * hp.c_clip);
  return hp;
}

double DiffusionScale(double c_clip, double sigma, std::int64_t n) {
  return 2.0 * c_clip * sigma / static_cast<double>(n);
}

double SensitivityBound(double eta, double c_clip, std::int64_t n) {
  return 2.0 * eta * c_clip / static_cast<double>(n);
}

double MomentBound(double lambda, double eta, double sigma, std::int64_t T) {
  if (!(lambda > 0.0)) throw ConfigError("lambda must be > 0");
  if (T < 0) throw ConfigError("T must be >= 0");
  if (T == 0) return 0.0;
  if (!(sigma > 0.0)) {
    throw InfiniteLossError("zero noise has an unbounded privacy loss");
  }
  return static_cast<double>(T) * (eta / (2.0 * sigma * sigma)) *
         (lambda + lambda * lambda);
}

TailCheck VerifyTail(const PrivacyBudget& budget, double eta, double sigma,
                     std::int64_t T) {
  budget.Validate();
  TailCheck out;
  const double eps = budget.epsilon;
  const double lambda = 4.0 * budget.log_inv_delta() / eps;
  out.lambda = lambda;
  if (T == 0) {
    out.direct_delta = std::exp(-lambda * eps);
    out.achieved_delta = out.direct_delta;
    out.ok = true;
    return out;
  }
  if (!(sigma > 0.0)) {
    out.direct_delta = std::numeric_limits<double>::infinity();
    out.achieved_delta = out.direct_delta;
    out.ok = false;
    return out;
  }
  const double alpha = MomentBound(lambda, eta, sigma, T);
  const double a = static_cast<double>(T) * eta / (2.0 * sigma * sigma);
  out.direct_delta = std::exp(alpha - lambda * eps);
  out.achieved_delta = a <= 0.5 * eps
                           ? std::exp(a * lambda * lambda - 0.5 * lambda * eps)
                           : out.direct_delta;
  out.ok = out.achieved_delta <= budget.delta * (1.0 + kTailRoundoff);
  return out;
}

double OptimizedDelta(const PrivacyBudget& budget, double eta, double sigma,
                      std::int64_t T, int grid_points) {
  budget.Validate();
  const double center = 4.0 * budget.log_inv_delta() / budget.epsilon;
  double best = std::numeric_limits<double>::infinity();
  for (int k = 0; k < grid_points; ++k) {
    const double frac = static_cast<double>(k) / (grid_points - 1);
    const double lambda = center * std::pow(10.0, -3.0 + 6.0 * frac);
    const double alpha = MomentBound(lambda, eta, sigma, T);
    best = std::min(best, std::exp(alpha - lambda * budget.epsilon));
  }
  return best;
}

}  // namespace dpflow
