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

#ifndef DPFLOW_ERRORS_H_
#define DPFLOW_ERRORS_H_

#include <cstdint>
#include <stdexcept>
#include <string>

namespace dpflow {

// Base class for every error raised by the library. The CLI maps the
// subclasses onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid user-supplied configuration (negative step size, c_clip <= 0, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Mismatched vector / matrix shapes.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Activation violates mu_0 = mu_2 = 0, mu_1 != 0 in strict mode.
class AdmissibilityError : public Error {
 public:
  using Error::Error;
};

// Privacy budget outside delta in (0,1), epsilon in (0, 8 log(1/delta)).
class BudgetRangeError : public Error {
 public:
  using Error::Error;
};

// Moment bound requested with zero noise.
class InfiniteLossError : public Error {
 public:
  using Error::Error;
};

// Feature vector with zero norm where a positive norm is required.
class DegenerateFeatureError : public Error {
 public:
  using Error::Error;
};

// Step size above the gradient-descent stability bound.
class StabilityError : public Error {
 public:
  StabilityError(const std::string& what, double bound)
      : Error(what), bound_(bound) {}
  double bound() const { return bound_; }

 private:
  double bound_;
};

// Iterate blew up (non-finite or norm above the divergence guard).
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, std::int64_t step)
      : Error(what), step_(step) {}
  std::int64_t step() const { return step_; }

 private:
  std::int64_t step_;
};

// Shared Brownian path too short or too coarse for a requested refinement.
class PathLengthError : public Error {
 public:
  using Error::Error;
};

// Linear algebra failure (SVD / eigensolver did not converge).
class NumericError : public Error {
 public:
  using Error::Error;
};

// Sizes outside the regime an analysis is defined for (e.g. n <= d).
class RegimeError : public Error {
 public:
  using Error::Error;
};

}  // namespace dpflow

#endif  // DPFLOW_ERRORS_H_
