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

#ifndef DPFLOW_ACTIVATION_H_
#define DPFLOW_ACTIVATION_H_

#include <string>
#include <vector>

namespace dpflow {

enum class ActivationKind { kTanh, kIdentity, kHermite };

// Component-wise nonlinearity of the random-features map. kHermite evaluates
// sum_l c_l He_l(z) / sqrt(l!) with probabilists' Hermite polynomials, so the
// supplied coefficients are exactly its normalized Hermite coefficients.
struct Activation {
  ActivationKind kind = ActivationKind::kTanh;
  std::vector<double> hermite;  // Only used by kHermite.

  static Activation Tanh() { return {ActivationKind::kTanh, {}}; }
  static Activation Identity() { return {ActivationKind::kIdentity, {}}; }
  static Activation Hermite(std::vector<double> coeffs) {
    return {ActivationKind::kHermite, std::move(coeffs)};
  }

  double operator()(double z) const;
  std::string Name() const;
};

// Normalized probabilists' Hermite polynomial He_l(z) / sqrt(l!).
double NormalizedHermite(int order, double z);

// Parses "tanh", "identity"; throws ConfigError otherwise.
Activation ParseActivation(const std::string& name);

}  // namespace dpflow

#endif  // DPFLOW_ACTIVATION_H_
