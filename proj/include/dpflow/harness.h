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

#ifndef DPFLOW_HARNESS_H_
#define DPFLOW_HARNESS_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dpflow/diagnostics.h"
#include "dpflow/ou_gf.h"
#include "dpflow/privacy.h"

namespace dpflow {

enum class Task { kSweepP, kSweepT, kGridClipT, kCollapse, kCalibrate, kDiagnose };

// What the private arm of sweep_p is compared against.
enum class Baseline {
  kClosedForm,  // minimum-norm interpolant, the limit of GD from zero
  kMatchedGd,   // plain GD with the private arm's step size and step count
};

Task ParseTask(const std::string& name);
std::string TaskName(Task task);

struct ExperimentConfig {
  Task task = Task::kSweepP;
  std::int64_t n = 500;
  std::int64_t d = 50;
  std::int64_t p = 2000;  // width for calibrate, diagnose and grid_clip_T
  std::vector<std::int64_t> p_list = {100, 250, 500, 1000, 2000, 5000};
  std::vector<std::int64_t> T_list;   // empty: task default
  std::vector<double> clip_list;      // multiples of sqrt(p); empty: default
  double epsilon = 4.0;
  std::optional<double> delta;        // default 1/n
  std::optional<double> eta;          // default eta_fraction * n / (2 lambda_max)
  double eta_fraction = 0.1;
  std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4};
  std::int64_t test_count = 20000;
  std::int64_t validation_count = 2000;
  std::string output_dir = ".";
  std::string activation = "tanh";
  double clip_multiplier = 0.5;       // sweep_T and collapse: C = c sqrt(p)
  std::vector<double> tune_clip = {0.5, 1.0};           // C = c sqrt(p)
  std::vector<double> tune_time = {1, 2, 4, 8, 16};    // tau = k d / p
  int collapse_points = 24;
  bool nonprivate = false;            // sigma = 0 and no clipping
  Baseline baseline = Baseline::kClosedForm;
  bool certificate = false;           // diagnose: run DP-GD and certify

  PrivacyBudget budget() const;
  std::vector<std::int64_t> resolved_T_list() const;
  std::vector<double> resolved_clip_list() const;
  // Throws ConfigError (or BudgetRangeError for the budget).
  void Validate() const;
};

// Keys mirror the struct fields; unknown keys are rejected.
ExperimentConfig ParseConfig(const std::string& json_text,
                             ExperimentConfig base = {});
ExperimentConfig LoadConfig(const std::string& path,
                            ExperimentConfig base = {});
std::string ConfigToJson(const ExperimentConfig& cfg);

// Fixed column set of the main CSV of each sweep task.
const std::vector<std::string>& CsvColumns(Task task);

struct PrivacyAudit {
  double epsilon = 0.0;
  double delta = 0.0;
  double sigma = 0.0;
  double eta = 0.0;
  std::int64_t steps = 0;
  double c_clip = 0.0;
  bool accountant_ok = false;
  double clip_fraction = 0.0;
  bool diverged = false;

  double eta_T() const { return eta * static_cast<double>(steps); }
};

// accountant_ok for a release of T noisy steps; T = 0 releases nothing.
bool AuditPrivacy(const PrivacyBudget& budget, double eta, double sigma,
                  std::int64_t T);

struct SweepPRow {
  std::int64_t p = 0;
  std::uint64_t seed = 0;
  RiskReport risk;  // private arm vs baseline
  PrivacyAudit audit;
  double tune_clip = 0.0;
  double tune_time = 0.0;
};

struct SweepPResult {
  std::vector<SweepPRow> rows;
  std::vector<std::int64_t> p_values;
  std::vector<double> gd_mean, gd_stderr, dp_mean, dp_stderr;
  std::vector<double> tuned_clip, tuned_time;
  std::string csv;
};

struct CurvePoint {
  std::int64_t p = 0;
  std::uint64_t seed = 0;
  std::int64_t T = 0;
  double test_loss = 0.0;
  double stderr = 0.0;
  PrivacyAudit audit;
};

struct Curve {
  std::int64_t p = 0;
  std::vector<std::int64_t> T;
  std::vector<double> mean;
  std::vector<double> stderr;
};

struct SweepTResult {
  double eta = 0.0;
  std::vector<CurvePoint> rows;
  std::vector<Curve> curves;  // seed means, one per p
  std::string csv;
};

struct CollapseResult {
  SweepTResult sweep;
  std::vector<double> grid;          // common abscissa, eta T p / d
  std::vector<double> control_grid;  // common abscissa, eta T d / p
  double max_discrepancy = 0.0;
  double control_discrepancy = 0.0;
  std::string csv;
};

struct CornerSummary {
  double bottom_left = 0.0;   // smallest C, smallest T
  double bottom_right = 0.0;  // largest C, smallest T
  double top_left = 0.0;      // smallest C, largest T
  double top_right = 0.0;     // largest C, largest T
};

struct GridCell {
  double clip_multiplier = 0.0;
  std::int64_t T = 0;
  std::uint64_t seed = 0;
  double test_loss = 0.0;
  double stderr = 0.0;
  PrivacyAudit audit;
};

struct GridResult {
  double eta = 0.0;
  std::int64_t p = 0;
  std::vector<double> clip_list;
  std::vector<std::int64_t> T_list;
  std::vector<GridCell> rows;
  Eigen::MatrixXd mean;    // T index x clip index
  Eigen::MatrixXd stderr;
  CornerSummary corners;
  std::string csv;
  std::string cells_csv;
};

struct CalibrationReport {
  std::int64_t n = 0, d = 0, p = 0;
  double epsilon = 0.0, delta = 0.0;
  ScalingHyperparams hyper;
};

struct DiagnoseReport {
  std::int64_t n = 0, d = 0, p = 0;
  RegimeReport regime;
  std::optional<SpectrumReport> spectrum;
  std::optional<ClipCertificate> certificate;
  double clip_fraction = 0.0;
};

// Step size shared by every cell of sweep_T, collapse and grid_clip_T:
// cfg.eta when set, else eta_fraction * n / (2 lambda_max) at width p_ref
// for the first seed.
double ReferenceEta(const ExperimentConfig& cfg, std::int64_t p_ref);

// Max over a log-spaced grid of `points` abscissae in the common range of
// all curves of the spread between curves (linear interpolation in log x).
// Returns 0 for a single curve. Throws ConfigError when the ranges do not
// overlap.
double MaxDiscrepancy(const std::vector<std::vector<double>>& xs,
                      const std::vector<std::vector<double>>& ys, int points,
                      std::vector<double>* grid = nullptr);

SweepPResult RunSweepP(const ExperimentConfig& cfg);
SweepTResult RunSweepT(const ExperimentConfig& cfg);
CollapseResult RunCollapse(const ExperimentConfig& cfg);
GridResult RunGridClipT(const ExperimentConfig& cfg);
CalibrationReport RunCalibrate(const ExperimentConfig& cfg);
DiagnoseReport RunDiagnose(const ExperimentConfig& cfg);

std::string ToJson(const CalibrationReport& report);
std::string ToJson(const DiagnoseReport& report);

struct TaskOutput {
  std::vector<std::string> files;
  std::string summary_json;
  bool any_diverged = false;
};

// Runs cfg.task and writes CSV, SVG and JSON files into cfg.output_dir.
TaskOutput RunTask(const ExperimentConfig& cfg);

}  // namespace dpflow

#endif  // DPFLOW_HARNESS_H_
