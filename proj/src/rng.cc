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

#include "dpflow/rng.h"

namespace dpflow {

std::uint64_t SplitMix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Rng MakeRng(std::uint64_t seed, std::uint64_t stream) {
  const std::uint64_t mixed = SplitMix64(SplitMix64(seed) ^ SplitMix64(~stream));
  std::seed_seq seq{static_cast<std::uint32_t>(mixed),
                    static_cast<std::uint32_t>(mixed >> 32),
                    static_cast<std::uint32_t>(stream),
                    static_cast<std::uint32_t>(seed)};
  return Rng(seq);
}

Eigen::VectorXd GaussianVector(Eigen::Index size, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd out(size);
  for (Eigen::Index i = 0; i < size; ++i) out[i] = normal(rng);
  return out;
}

Eigen::MatrixXd GaussianMatrix(Eigen::Index rows, Eigen::Index cols,
                               double stddev, Rng& rng) {
  std::normal_distribution<double> normal(0.0, stddev);
  Eigen::MatrixXd out(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) out(i, j) = normal(rng);
  }
  return out;
}

}  // namespace dpflow
