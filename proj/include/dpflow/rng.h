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

#ifndef DPFLOW_RNG_H_
#define DPFLOW_RNG_H_

#include <cstdint>
#include <random>

#include <Eigen/Core>

namespace dpflow {

// Every random quantity is drawn from an explicit (seed, stream) pair so that
// experiments are bit-reproducible regardless of scheduling.
using Rng = std::mt19937_64;

// Stream ids used across the library. Callers may use any other value for
// their own streams.
enum class Stream : std::uint64_t {
  kTeacher = 1,
  kTrainInputs = 2,
  kFeatures = 3,
  kTestPoints = 4,
  kAlgorithmNoise = 5,
  kBrownianPath = 6,
  kValidation = 7,
  kOuSampler = 8,
};

std::uint64_t SplitMix64(std::uint64_t x);

// Deterministic generator for the given seed and stream id.
Rng MakeRng(std::uint64_t seed, std::uint64_t stream);
inline Rng MakeRng(std::uint64_t seed, Stream stream) {
  return MakeRng(seed, static_cast<std::uint64_t>(stream));
}

// Vector of i.i.d. N(0, 1) draws.
Eigen::VectorXd GaussianVector(Eigen::Index size, Rng& rng);

// Fill a matrix with i.i.d. N(0, stddev^2) draws in row-major order.
Eigen::MatrixXd GaussianMatrix(Eigen::Index rows, Eigen::Index cols,
                               double stddev, Rng& rng);

}  // namespace dpflow

#endif  // DPFLOW_RNG_H_
