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

// dpflow: experiment runner.
//
//   dpflow <task> [--config path.json] [--n N] [--d D] [--p P] [--eps E]
//          [--delta D] [--eta H] [--seeds 0,1,2] [--out DIR] ...
//
// Exit codes: 0 success, 1 other failure, 2 configuration error,
// 3 divergence (with --strict-divergence, also any flagged row).

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dpflow/errors.h"
#include "dpflow/harness.h"

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitDivergence = 3;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Differentially private gradient descent experiments"};
  std::string task;
  std::string config_path;
  std::optional<std::int64_t> n, d, p, test_count;
  std::optional<double> eps, delta, eta, eta_fraction, clip_multiplier;
  std::vector<std::uint64_t> seeds;
  std::vector<std::int64_t> p_list, T_list;
  std::vector<double> clip_list;
  std::optional<std::string> out, activation;
  bool nonprivate = false, certificate = false, strict = false;

  app.add_option("task", task, "sweep_p, sweep_T, collapse, grid_clip_T, "
                               "calibrate or diagnose")
      ->required();
  app.add_option("--config", config_path, "JSON config file");
  app.add_option("--n", n, "training samples");
  app.add_option("--d", d, "input dimension");
  app.add_option("--p", p, "number of features (single-width tasks)");
  app.add_option("--eps", eps, "privacy epsilon");
  app.add_option("--delta", delta, "privacy delta (default 1/n)");
  app.add_option("--eta", eta, "step size");
  app.add_option("--eta-fraction", eta_fraction,
                 "step size as a fraction of n / (2 lambda_max)");
  app.add_option("--seeds", seeds, "seeds")->delimiter(',');
  app.add_option("--p-list", p_list, "widths")->delimiter(',');
  app.add_option("--T-list", T_list, "step counts")->delimiter(',');
  app.add_option("--clip-list", clip_list, "clip multipliers of sqrt(p)")
      ->delimiter(',');
  app.add_option("--clip-multiplier", clip_multiplier,
                 "sweep_T / collapse clip multiplier of sqrt(p)");
  app.add_option("--test-count", test_count, "test points");
  app.add_option("--activation", activation, "tanh or identity");
  app.add_option("--out", out, "output directory");
  app.add_flag("--nonprivate", nonprivate, "sigma = 0 and no clipping");
  app.add_flag("--certificate", certificate, "diagnose: certify a DP-GD run");
  app.add_flag("--strict-divergence", strict,
               "exit 3 when any row diverged");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    dpflow::ExperimentConfig cfg;
    if (!config_path.empty()) cfg = dpflow::LoadConfig(config_path);
    cfg.task = dpflow::ParseTask(task);
    if (n) cfg.n = *n;
    if (d) cfg.d = *d;
    if (p) cfg.p = *p;
    if (eps) cfg.epsilon = *eps;
    if (delta) cfg.delta = *delta;
    if (eta) cfg.eta = *eta;
    if (eta_fraction) cfg.eta_fraction = *eta_fraction;
    if (clip_multiplier) cfg.clip_multiplier = *clip_multiplier;
    if (test_count) cfg.test_count = *test_count;
    if (!seeds.empty()) cfg.seeds = seeds;
    if (!p_list.empty()) cfg.p_list = p_list;
    if (!T_list.empty()) cfg.T_list = T_list;
    if (!clip_list.empty()) cfg.clip_list = clip_list;
    if (out) cfg.output_dir = *out;
    if (activation) cfg.activation = *activation;
    if (nonprivate) cfg.nonprivate = true;
    if (certificate) cfg.certificate = true;

    const dpflow::TaskOutput result = dpflow::RunTask(cfg);
    std::cout << result.summary_json << "\n";
    for (const auto& f : result.files) std::cerr << "wrote " << f << "\n";
    if (result.any_diverged) {
      std::cerr << "warning: some runs diverged and are flagged\n";
      if (strict) return kExitDivergence;
    }
    return 0;
  } catch (const dpflow::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const dpflow::BudgetRangeError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const dpflow::DivergenceError& e) {
    std::cerr << "divergence: " << e.what() << "\n";
    return kExitDivergence;
  } catch (const dpflow::StabilityError& e) {
    std::cerr << "divergence: " << e.what() << "\n";
    return kExitDivergence;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}
