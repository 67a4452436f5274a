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

// OpenMP kernels against their serial references.

#include <benchmark/benchmark.h>

#include "dpflow/activation.h"
#include "dpflow/kernels.h"
#include "dpflow/rng.h"

namespace {

struct Fixture {
  Eigen::MatrixXd inputs, weights, features;
  Eigen::VectorXd theta, coeffs;

  Fixture(Eigen::Index n, Eigen::Index p, Eigen::Index d) {
    dpflow::Rng rng = dpflow::MakeRng(7, 99);
    inputs = dpflow::GaussianMatrix(n, d, 1.0, rng);
    weights = dpflow::GaussianMatrix(p, d, 1.0 / std::sqrt(double(d)), rng);
    features = dpflow::kernels::serial::FeatureMatrix(
        inputs, weights, dpflow::Activation::Tanh());
    theta = dpflow::GaussianVector(p, rng);
    coeffs = dpflow::GaussianVector(n, rng);
  }
};

const Fixture& Get(Eigen::Index p) {
  static Fixture f1000(500, 1000, 50), f5000(500, 5000, 50);
  return p == 1000 ? f1000 : f5000;
}

template <bool kParallel>
void BM_FeatureMatrix(benchmark::State& state) {
  const Fixture& f = Get(state.range(0));
  for (auto _ : state) {
    auto m = kParallel ? dpflow::kernels::FeatureMatrix(
                             f.inputs, f.weights, dpflow::Activation::Tanh())
                       : dpflow::kernels::serial::FeatureMatrix(
                             f.inputs, f.weights, dpflow::Activation::Tanh());
    benchmark::DoNotOptimize(m.data());
  }
}

template <bool kParallel>
void BM_Gram(benchmark::State& state) {
  const Fixture& f = Get(state.range(0));
  for (auto _ : state) {
    auto m = kParallel ? dpflow::kernels::Gram(f.features)
                       : dpflow::kernels::serial::Gram(f.features);
    benchmark::DoNotOptimize(m.data());
  }
}

template <bool kParallel>
void BM_MatVec(benchmark::State& state) {
  const Fixture& f = Get(state.range(0));
  for (auto _ : state) {
    auto v = kParallel ? dpflow::kernels::MatVec(f.features, f.theta)
                       : dpflow::kernels::serial::MatVec(f.features, f.theta);
    benchmark::DoNotOptimize(v.data());
  }
}

template <bool kParallel>
void BM_MatTVec(benchmark::State& state) {
  const Fixture& f = Get(state.range(0));
  for (auto _ : state) {
    auto v = kParallel ? dpflow::kernels::MatTVec(f.features, f.coeffs)
                       : dpflow::kernels::serial::MatTVec(f.features, f.coeffs);
    benchmark::DoNotOptimize(v.data());
  }
}

}  // namespace

BENCHMARK(BM_FeatureMatrix<true>)->Arg(1000)->Arg(5000);
BENCHMARK(BM_FeatureMatrix<false>)->Arg(1000)->Arg(5000);
BENCHMARK(BM_Gram<true>)->Arg(1000);
BENCHMARK(BM_Gram<false>)->Arg(1000);
BENCHMARK(BM_MatVec<true>)->Arg(1000)->Arg(5000);
BENCHMARK(BM_MatVec<false>)->Arg(1000)->Arg(5000);
BENCHMARK(BM_MatTVec<true>)->Arg(1000)->Arg(5000);
BENCHMARK(BM_MatTVec<false>)->Arg(1000)->Arg(5000);

BENCHMARK_MAIN();
