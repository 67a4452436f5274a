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

#include "dpflow/harness.h"

#include <algorithm>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>

#include "json.hpp"

#include "dpflow/dp_gd.h"
#include "dpflow/errors.h"
#include "dpflow/report.h"
#include "dpflow/rf_model.h"
#include "dpflow/rng.h"

namespace dpflow {
namespace {

using nlohmann::json;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

const std::vector<std::int64_t> kDefaultSweepT = {
    0, 1, 2, 3, 4, 6, 8, 11, 16, 23, 32, 45, 64, 91, 128, 181, 256};
const std::vector<std::int64_t> kDefaultGridT = {1, 3, 10, 30, 100, 300, 1000};
const std::vector<double> kDefaultGridClip = {0.05, 0.1, 0.2, 0.5, 1, 2, 5};

// Runs fn(0..count-1) on the OpenMP pool. Results must be written by index;
// the first failing job (by index) is rethrown.
void ParallelJobs(std::size_t count, const std::function<void(std::size_t)>& fn) {
  std::vector<std::exception_ptr> errors(count);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t j = 0; j < static_cast<std::int64_t>(count); ++j) {
    try {
      fn(static_cast<std::size_t>(j));
    } catch (...) {
      errors[j] = std::current_exception();
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

struct MeanStderr {
  double mean = 0.0;
  double stderr = 0.0;
};

MeanStderr Summarize(const std::vector<double>& v) {
  MeanStderr out;
  if (v.empty()) return {kNaN, kNaN};
  double sum = 0.0;
  for (double x : v) sum += x;
  out.mean = sum / static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - out.mean) * (x - out.mean);
    out.stderr = std::sqrt(ss / static_cast<double>(v.size() - 1)) /
                 std::sqrt(static_cast<double>(v.size()));
  }
  return out;
}

MeanStderr ColumnStats(const Eigen::MatrixXd& losses, Eigen::Index c) {
  const Eigen::VectorXd col = losses.col(c);
  return Summarize(std::vector<double>(col.data(), col.data() + col.size()));
}

std::string F(double v) { return FormatDouble(v); }
std::string I(std::int64_t v) { return std::to_string(v); }
std::string U(std::uint64_t v) { return std::to_string(v); }
std::string B(bool v) { return v ? "true" : "false"; }

std::string CsvText(Task task, const std::vector<std::vector<std::string>>& rows) {
  std::string out = CsvLine(CsvColumns(task)) + "\n";
  for (const auto& r : rows) out += CsvLine(r) + "\n";
  return out;
}

std::vector<std::string> AuditFields(const PrivacyAudit& a) {
  return {F(a.eta),     I(a.steps),           F(a.eta_T()),
          F(a.c_clip),  F(a.sigma),           F(a.epsilon),
          F(a.delta),   B(a.accountant_ok),   F(a.clip_fraction),
          B(a.diverged)};
}

// Width-p problem for one seed.
struct Problem {
  Dataset data;
  FeatureMap features;
  TrainingSet train;
};

Problem MakeProblem(const ExperimentConfig& cfg, std::int64_t p,
                    std::uint64_t seed) {
  Problem pr;
  pr.data = SampleData(cfg.n, cfg.d, seed);
  pr.features = InitFeatures(p, cfg.d, seed, ParseActivation(cfg.activation));
  pr.train = MakeTrainingSet(pr.data, pr.features);
  return pr;
}

TestSet MakeSplit(const Problem& pr, std::int64_t m, std::uint64_t seed,
                  Stream stream) {
  Rng rng = MakeRng(seed, stream);
  return MakeTestSet(*pr.data.teacher, m, rng);
}

struct PrivateRun {
  Eigen::VectorXd theta;
  PrivacyAudit audit;
};

// One private run of T steps with clipping constant c_clip; a run that
// diverges yields a NaN parameter vector and a flagged audit.
PrivateRun RunPrivate(const ExperimentConfig& cfg, const TrainingSet& ts,
                      double eta, std::int64_t T, double c_clip,
                      std::uint64_t seed) {
  const PrivacyBudget budget = cfg.budget();
  PrivateRun run;
  PrivacyAudit& a = run.audit;
  a.epsilon = budget.epsilon;
  a.delta = budget.delta;
  a.eta = eta;
  a.steps = T;
  a.c_clip = cfg.nonprivate ? kNoClip : c_clip;
  if (T == 0) {
    run.theta = Eigen::VectorXd::Zero(ts.features.cols());
    a.accountant_ok = true;
    return run;
  }
  a.sigma = cfg.nonprivate ? 0.0 : CalibrateSigma(budget, eta * T);
  a.accountant_ok = AuditPrivacy(budget, eta, a.sigma, T);
  DPGDConfig dc;
  dc.eta = eta;
  dc.steps = T;
  dc.c_clip = a.c_clip;
  dc.sigma = a.sigma;
  dc.checkpoint_policy = CheckpointPolicy::kGeometric;
  Rng rng = MakeRng(seed, Stream::kAlgorithmNoise);
  try {
    const Trajectory traj = RunDpGd(dc, ts, rng);
    run.theta = traj.final_theta();
    a.clip_fraction = static_cast<double>(traj.total_clip_events()) /
                      (static_cast<double>(ts.size()) * static_cast<double>(T));
  } catch (const DivergenceError&) {
    run.theta = Eigen::VectorXd::Constant(ts.features.cols(), kNaN);
    a.diverged = true;
    a.clip_fraction = kNaN;
  }
  return run;
}

double EtaFor(const ExperimentConfig& cfg, double lambda_max) {
  if (cfg.eta) return *cfg.eta;
  return cfg.eta_fraction * static_cast<double>(cfg.n) / (2.0 * lambda_max);
}

std::string TaskPath(const ExperimentConfig& cfg, const std::string& name) {
  return (std::filesystem::path(cfg.output_dir) / name).string();
}

template <typename T>
std::vector<T> ReadList(const json& j, const char* key) {
  if (!j.is_array() || j.empty()) {
    throw ConfigError(std::string(key) + " must be a nonempty array");
  }
  return j.get<std::vector<T>>();
}

double InterpLogX(const std::vector<double>& x, const std::vector<double>& y,
                  double q) {
  const auto it = std::lower_bound(x.begin(), x.end(), q);
  if (it == x.begin()) return y.front();
  if (it == x.end()) return y.back();
  const std::size_t k = static_cast<std::size_t>(it - x.begin());
  const double t = (std::log(q) - std::log(x[k - 1])) /
                   (std::log(x[k]) - std::log(x[k - 1]));
  return y[k - 1] + t * (y[k] - y[k - 1]);
}

}  // namespace

Task ParseTask(const std::string& name) {
  if (name == "sweep_p") return Task::kSweepP;
  if (name == "sweep_T") return Task::kSweepT;
  if (name == "grid_clip_T") return Task::kGridClipT;
  if (name == "collapse") return Task::kCollapse;
  if (name == "calibrate") return Task::kCalibrate;
  if (name == "diagnose") return Task::kDiagnose;
  throw ConfigError("unknown task '" + name + "'");
}

std::string TaskName(Task task) {
  switch (task) {
    case Task::kSweepP: return "sweep_p";
    case Task::kSweepT: return "sweep_T";
    case Task::kGridClipT: return "grid_clip_T";
    case Task::kCollapse: return "collapse";
    case Task::kCalibrate: return "calibrate";
    case Task::kDiagnose: return "diagnose";
  }
  return "unknown";
}

PrivacyBudget ExperimentConfig::budget() const {
  return {epsilon, delta.value_or(1.0 / static_cast<double>(n))};
}

std::vector<std::int64_t> ExperimentConfig::resolved_T_list() const {
  if (!T_list.empty()) return T_list;
  return task == Task::kGridClipT ? kDefaultGridT : kDefaultSweepT;
}

std::vector<double> ExperimentConfig::resolved_clip_list() const {
  return clip_list.empty() ? kDefaultGridClip : clip_list;
}

void ExperimentConfig::Validate() const {
  if (n < 2 || d < 2) throw ConfigError("n and d must be >= 2");
  if (p < 1) throw ConfigError("p must be >= 1");
  if (p_list.empty()) throw ConfigError("p_list must be nonempty");
  for (auto v : p_list) {
    if (v < 1) throw ConfigError("p_list entries must be >= 1");
  }
  for (auto v : T_list) {
    if (v < 0) throw ConfigError("T_list entries must be >= 0");
  }
  for (double v : clip_list) {
    if (!(v > 0.0)) throw ConfigError("clip_list entries must be > 0");
  }
  if (seeds.empty()) throw ConfigError("seeds must be nonempty");
  if (test_count < 100) throw ConfigError("test_count must be >= 100");
  if (validation_count < 2) throw ConfigError("validation_count must be >= 2");
  if (eta && !(*eta > 0.0)) throw ConfigError("eta must be > 0");
  if (!(eta_fraction > 0.0)) throw ConfigError("eta_fraction must be > 0");
  if (!(clip_multiplier > 0.0)) throw ConfigError("clip_multiplier must be > 0");
  if (tune_clip.empty() || tune_time.empty()) {
    throw ConfigError("tuning grids must be nonempty");
  }
  for (double v : tune_clip) {
    if (!(v > 0.0)) throw ConfigError("tune_clip entries must be > 0");
  }
  for (double v : tune_time) {
    if (!(v > 0.0)) throw ConfigError("tune_time entries must be > 0");
  }
  if (collapse_points < 2) throw ConfigError("collapse_points must be >= 2");
  ParseActivation(activation);
  budget().Validate();
}

ExperimentConfig ParseConfig(const std::string& json_text,
                             ExperimentConfig cfg) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid config JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "task") cfg.task = ParseTask(v.get<std::string>());
      else if (key == "n") cfg.n = v.get<std::int64_t>();
      else if (key == "d") cfg.d = v.get<std::int64_t>();
      else if (key == "p") cfg.p = v.get<std::int64_t>();
      else if (key == "p_list") cfg.p_list = ReadList<std::int64_t>(v, "p_list");
      else if (key == "T_list") cfg.T_list = ReadList<std::int64_t>(v, "T_list");
      else if (key == "clip_list") cfg.clip_list = ReadList<double>(v, "clip_list");
      else if (key == "epsilon") cfg.epsilon = v.get<double>();
      else if (key == "delta") cfg.delta = v.get<double>();
      else if (key == "eta") cfg.eta = v.get<double>();
      else if (key == "eta_fraction") cfg.eta_fraction = v.get<double>();
      else if (key == "seeds") cfg.seeds = ReadList<std::uint64_t>(v, "seeds");
      else if (key == "test_count") cfg.test_count = v.get<std::int64_t>();
      else if (key == "validation_count") cfg.validation_count = v.get<std::int64_t>();
      else if (key == "output_dir") cfg.output_dir = v.get<std::string>();
      else if (key == "activation") cfg.activation = v.get<std::string>();
      else if (key == "clip_multiplier") cfg.clip_multiplier = v.get<double>();
      else if (key == "tune_clip") cfg.tune_clip = ReadList<double>(v, "tune_clip");
      else if (key == "tune_time") cfg.tune_time = ReadList<double>(v, "tune_time");
      else if (key == "collapse_points") cfg.collapse_points = v.get<int>();
      else if (key == "nonprivate") cfg.nonprivate = v.get<bool>();
      else if (key == "certificate") cfg.certificate = v.get<bool>();
      else if (key == "baseline") {
        const auto s = v.get<std::string>();
        if (s == "closed_form") cfg.baseline = Baseline::kClosedForm;
        else if (s == "matched_gd") cfg.baseline = Baseline::kMatchedGd;
        else throw ConfigError("unknown baseline '" + s + "'");
      } else {
        throw ConfigError("unknown config key '" + key + "'");
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
  return cfg;
}

ExperimentConfig LoadConfig(const std::string& path, ExperimentConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ParseConfig(ss.str(), std::move(base));
}

std::string ConfigToJson(const ExperimentConfig& cfg) {
  json j;
  j["task"] = TaskName(cfg.task);
  j["n"] = cfg.n;
  j["d"] = cfg.d;
  j["p"] = cfg.p;
  j["p_list"] = cfg.p_list;
  j["T_list"] = cfg.resolved_T_list();
  j["clip_list"] = cfg.resolved_clip_list();
  j["epsilon"] = cfg.epsilon;
  j["delta"] = cfg.budget().delta;
  if (cfg.eta) j["eta"] = *cfg.eta;
  j["eta_fraction"] = cfg.eta_fraction;
  j["seeds"] = cfg.seeds;
  j["test_count"] = cfg.test_count;
  j["validation_count"] = cfg.validation_count;
  j["output_dir"] = cfg.output_dir;
  j["activation"] = cfg.activation;
  j["clip_multiplier"] = cfg.clip_multiplier;
  j["tune_clip"] = cfg.tune_clip;
  j["tune_time"] = cfg.tune_time;
  j["collapse_points"] = cfg.collapse_points;
  j["nonprivate"] = cfg.nonprivate;
  j["certificate"] = cfg.certificate;
  j["baseline"] =
      cfg.baseline == Baseline::kClosedForm ? "closed_form" : "matched_gd";
  return j.dump(2);
}

const std::vector<std::string>& CsvColumns(Task task) {
  static const std::vector<std::string> kAudit = {
      "eta",   "steps", "eta_T",         "c_clip",        "sigma",
      "epsilon", "delta", "accountant_ok", "clip_fraction", "diverged"};
  auto with_audit = [](std::vector<std::string> head) {
    head.insert(head.end(), kAudit.begin(), kAudit.end());
    return head;
  };
  static const std::vector<std::string> kSweepP = with_audit(
      {"p", "seed", "risk_gd", "stderr_gd", "risk_dpgd", "stderr_dpgd",
       "excess", "stderr_excess", "m", "tune_clip", "tune_time"});
  static const std::vector<std::string> kSweepT =
      with_audit({"p", "seed", "T", "test_loss", "stderr"});
  static const std::vector<std::string> kCollapse = with_audit(
      {"p", "seed", "T", "x_scaled", "x_control", "test_loss", "stderr"});
  static const std::vector<std::string> kGrid = with_audit(
      {"clip_multiplier", "T", "seed", "test_loss", "stderr"});
  static const std::vector<std::string> kNone;
  switch (task) {
    case Task::kSweepP: return kSweepP;
    case Task::kSweepT: return kSweepT;
    case Task::kCollapse: return kCollapse;
    case Task::kGridClipT: return kGrid;
    default: return kNone;
  }
}

bool AuditPrivacy(const PrivacyBudget& budget, double eta, double sigma,
                  std::int64_t T) {
  if (T == 0) return true;
  if (!(sigma > 0.0)) return false;
  return VerifyTail(budget, eta, sigma, T).ok;
}

double ReferenceEta(const ExperimentConfig& cfg, std::int64_t p_ref) {
  if (cfg.eta) return *cfg.eta;
  const Problem pr = MakeProblem(cfg, p_ref, cfg.seeds.front());
  return EtaFor(cfg, LargestKernelEigenvalue(pr.train));
}

double MaxDiscrepancy(const std::vector<std::vector<double>>& xs,
                      const std::vector<std::vector<double>>& ys, int points,
                      std::vector<double>* grid) {
  if (xs.size() != ys.size() || xs.empty()) {
    throw DimensionError("MaxDiscrepancy needs matching nonempty curves");
  }
  if (points < 2) throw ConfigError("MaxDiscrepancy needs >= 2 points");
  double lo = 0.0, hi = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < xs.size(); ++c) {
    if (xs[c].size() != ys[c].size() || xs[c].empty()) {
      throw DimensionError("curve abscissae and values differ in length");
    }
    if (!std::is_sorted(xs[c].begin(), xs[c].end()) || xs[c].front() <= 0.0) {
      throw ConfigError("curve abscissae must be positive and increasing");
    }
    lo = std::max(lo, xs[c].front());
    hi = std::min(hi, xs[c].back());
  }
  if (!(lo <= hi)) throw ConfigError("curves have no common abscissa range");
  if (grid) grid->clear();
  double worst = 0.0;
  for (int k = 0; k < points; ++k) {
    const double q =
        hi > lo ? std::exp(std::log(lo) + k * (std::log(hi) - std::log(lo)) /
                                              (points - 1))
                : lo;
    if (grid) grid->push_back(q);
    double ymin = std::numeric_limits<double>::infinity(), ymax = -ymin;
    for (std::size_t c = 0; c < xs.size(); ++c) {
      const double y = InterpLogX(xs[c], ys[c], q);
      if (std::isnan(y)) return kNaN;
      ymin = std::min(ymin, y);
      ymax = std::max(ymax, y);
    }
    worst = std::max(worst, ymax - ymin);
  }
  return worst;
}

SweepPResult RunSweepP(const ExperimentConfig& cfg) {
  cfg.Validate();
  struct Candidate {
    double clip = 0.0, time = 0.0;
    double validation = kNaN;
    RiskReport risk;
    PrivacyAudit audit;
  };
  const std::size_t np = cfg.p_list.size(), ns = cfg.seeds.size();
  std::vector<std::vector<Candidate>> jobs(np * ns);

  ParallelJobs(np * ns, [&](std::size_t job) {
    const std::int64_t p = cfg.p_list[job / ns];
    const std::uint64_t seed = cfg.seeds[job % ns];
    const Problem pr = MakeProblem(cfg, p, seed);
    const SpectralDecomp sd = Decompose(pr.train.features);
    const Eigen::VectorXd theta_star = PseudoinverseSolve(sd, pr.train.labels);
    const double eta = EtaFor(cfg, sd.lambda_max());
    const double root_p = std::sqrt(static_cast<double>(p));

    std::vector<Candidate> cands;
    std::vector<Eigen::VectorXd> thetas, baselines;
    for (double c : cfg.tune_clip) {
      for (double k : cfg.tune_time) {
        const double tau = k * static_cast<double>(cfg.d) / static_cast<double>(p);
        const auto T = std::max<std::int64_t>(
            1, static_cast<std::int64_t>(std::ceil(tau / eta)));
        PrivateRun run = RunPrivate(cfg, pr.train, eta, T, c * root_p, seed);
        Candidate cand;
        cand.clip = c;
        cand.time = k;
        cand.audit = run.audit;
        cands.push_back(cand);
        thetas.push_back(std::move(run.theta));
        if (cfg.baseline == Baseline::kMatchedGd) {
          DPGDConfig gc;
          gc.eta = eta;
          gc.steps = T;
          gc.checkpoint_policy = CheckpointPolicy::kGeometric;
          baselines.push_back(
              RunGd(gc, pr.train, sd.lambda_max()).final_theta());
        }
      }
    }
    const TestSet val =
        MakeSplit(pr, cfg.validation_count, seed, Stream::kValidation);
    const Eigen::MatrixXd vloss = TestLosses(pr.features, val, thetas);
    const TestSet test = MakeSplit(pr, cfg.test_count, seed, Stream::kTestPoints);
    std::vector<Eigen::VectorXd> all = thetas;
    if (cfg.baseline == Baseline::kClosedForm) {
      all.push_back(theta_star);
    } else {
      all.insert(all.end(), baselines.begin(), baselines.end());
    }
    const Eigen::MatrixXd tloss = TestLosses(pr.features, test, all);
    const auto nc = static_cast<Eigen::Index>(cands.size());
    for (Eigen::Index c = 0; c < nc; ++c) {
      cands[c].validation = vloss.col(c).mean();
      const Eigen::Index b =
          cfg.baseline == Baseline::kClosedForm ? nc : nc + c;
      cands[c].risk = PairedRisk(tloss.col(c), tloss.col(b));
      cands[c].risk.seed = seed;
    }
    jobs[job] = std::move(cands);
  });

  SweepPResult res;
  std::vector<std::vector<std::string>> lines;
  for (std::size_t ip = 0; ip < np; ++ip) {
    const std::size_t ncand = jobs[ip * ns].size();
    std::size_t best = 0;
    double best_val = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < ncand; ++c) {
      double sum = 0.0;
      for (std::size_t s = 0; s < ns; ++s) sum += jobs[ip * ns + s][c].validation;
      const double mean = sum / static_cast<double>(ns);
      if (std::isfinite(mean) && mean < best_val) {
        best_val = mean;
        best = c;
      }
    }
    std::vector<double> gd, dp;
    for (std::size_t s = 0; s < ns; ++s) {
      const Candidate& cand = jobs[ip * ns + s][best];
      SweepPRow row;
      row.p = cfg.p_list[ip];
      row.seed = cfg.seeds[s];
      row.risk = cand.risk;
      row.audit = cand.audit;
      row.tune_clip = cand.clip;
      row.tune_time = cand.time;
      gd.push_back(row.risk.risk_baseline);
      dp.push_back(row.risk.risk_private);
      std::vector<std::string> f = {
          I(row.p), U(row.seed), F(row.risk.risk_baseline),
          F(row.risk.stderr_baseline), F(row.risk.risk_private),
          F(row.risk.stderr_private), F(row.risk.excess),
          F(row.risk.stderr_excess), I(row.risk.test_count), F(row.tune_clip),
          F(row.tune_time)};
      const auto a = AuditFields(row.audit);
      f.insert(f.end(), a.begin(), a.end());
      lines.push_back(std::move(f));
      res.rows.push_back(row);
    }
    const MeanStderr g = Summarize(gd), q = Summarize(dp);
    res.p_values.push_back(cfg.p_list[ip]);
    res.gd_mean.push_back(g.mean);
    res.gd_stderr.push_back(g.stderr);
    res.dp_mean.push_back(q.mean);
    res.dp_stderr.push_back(q.stderr);
    res.tuned_clip.push_back(jobs[ip * ns][best].clip);
    res.tuned_time.push_back(jobs[ip * ns][best].time);
  }
  res.csv = CsvText(Task::kSweepP, lines);
  return res;
}

SweepTResult RunSweepT(const ExperimentConfig& cfg) {
  cfg.Validate();
  const auto T_list = cfg.resolved_T_list();
  const std::size_t np = cfg.p_list.size(), ns = cfg.seeds.size();
  SweepTResult res;
  res.eta = ReferenceEta(
      cfg, *std::max_element(cfg.p_list.begin(), cfg.p_list.end()));
  std::vector<std::vector<CurvePoint>> jobs(np * ns);

  ParallelJobs(np * ns, [&](std::size_t job) {
    const std::int64_t p = cfg.p_list[job / ns];
    const std::uint64_t seed = cfg.seeds[job % ns];
    const Problem pr = MakeProblem(cfg, p, seed);
    const double c_clip = cfg.clip_multiplier * std::sqrt(static_cast<double>(p));
    std::vector<Eigen::VectorXd> thetas;
    std::vector<CurvePoint> pts;
    for (std::int64_t T : T_list) {
      PrivateRun run = RunPrivate(cfg, pr.train, res.eta, T, c_clip, seed);
      CurvePoint pt;
      pt.p = p;
      pt.seed = seed;
      pt.T = T;
      pt.audit = run.audit;
      pts.push_back(pt);
      thetas.push_back(std::move(run.theta));
    }
    const TestSet test = MakeSplit(pr, cfg.test_count, seed, Stream::kTestPoints);
    const Eigen::MatrixXd loss = TestLosses(pr.features, test, thetas);
    for (std::size_t k = 0; k < pts.size(); ++k) {
      const MeanStderr st = ColumnStats(loss, static_cast<Eigen::Index>(k));
      pts[k].test_loss = st.mean;
      pts[k].stderr = st.stderr;
    }
    jobs[job] = std::move(pts);
  });

  std::vector<std::vector<std::string>> lines;
  for (std::size_t ip = 0; ip < np; ++ip) {
    Curve curve;
    curve.p = cfg.p_list[ip];
    for (std::size_t k = 0; k < T_list.size(); ++k) {
      std::vector<double> vals;
      for (std::size_t s = 0; s < ns; ++s) {
        vals.push_back(jobs[ip * ns + s][k].test_loss);
      }
      const MeanStderr st = Summarize(vals);
      curve.T.push_back(T_list[k]);
      curve.mean.push_back(st.mean);
      curve.stderr.push_back(st.stderr);
    }
    res.curves.push_back(std::move(curve));
    for (std::size_t s = 0; s < ns; ++s) {
      for (const CurvePoint& pt : jobs[ip * ns + s]) {
        std::vector<std::string> f = {I(pt.p), U(pt.seed), I(pt.T),
                                      F(pt.test_loss), F(pt.stderr)};
        const auto a = AuditFields(pt.audit);
        f.insert(f.end(), a.begin(), a.end());
        lines.push_back(std::move(f));
        res.rows.push_back(pt);
      }
    }
  }
  res.csv = CsvText(Task::kSweepT, lines);
  return res;
}

CollapseResult RunCollapse(const ExperimentConfig& cfg) {
  CollapseResult res;
  res.sweep = RunSweepT(cfg);
  const double eta = res.sweep.eta;
  const double d = static_cast<double>(cfg.d);
  std::vector<std::vector<double>> xs, xc, ys;
  for (const Curve& c : res.sweep.curves) {
    const double p = static_cast<double>(c.p);
    std::vector<double> x, x2, y;
    for (std::size_t k = 0; k < c.T.size(); ++k) {
      if (c.T[k] == 0) continue;
      const double t = eta * static_cast<double>(c.T[k]);
      x.push_back(t * p / d);
      x2.push_back(t * d / p);
      y.push_back(c.mean[k]);
    }
    xs.push_back(std::move(x));
    xc.push_back(std::move(x2));
    ys.push_back(std::move(y));
  }
  res.max_discrepancy = MaxDiscrepancy(xs, ys, cfg.collapse_points, &res.grid);
  res.control_discrepancy =
      MaxDiscrepancy(xc, ys, cfg.collapse_points, &res.control_grid);

  std::vector<std::vector<std::string>> lines;
  for (const CurvePoint& pt : res.sweep.rows) {
    const double t = eta * static_cast<double>(pt.T);
    const double p = static_cast<double>(pt.p);
    std::vector<std::string> f = {I(pt.p), U(pt.seed), I(pt.T), F(t * p / d),
                                  F(t * d / p), F(pt.test_loss), F(pt.stderr)};
    const auto a = AuditFields(pt.audit);
    f.insert(f.end(), a.begin(), a.end());
    lines.push_back(std::move(f));
  }
  res.csv = CsvText(Task::kCollapse, lines);
  return res;
}

GridResult RunGridClipT(const ExperimentConfig& cfg) {
  cfg.Validate();
  GridResult res;
  res.p = cfg.p;
  res.clip_list = cfg.resolved_clip_list();
  res.T_list = cfg.resolved_T_list();
  res.eta = ReferenceEta(cfg, cfg.p);
  const std::size_t ns = cfg.seeds.size();
  const std::size_t nc = res.clip_list.size(), nt = res.T_list.size();
  std::vector<std::vector<GridCell>> jobs(ns);

  ParallelJobs(ns, [&](std::size_t s) {
    const std::uint64_t seed = cfg.seeds[s];
    const Problem pr = MakeProblem(cfg, cfg.p, seed);
    const double root_p = std::sqrt(static_cast<double>(cfg.p));
    std::vector<Eigen::VectorXd> thetas;
    std::vector<GridCell> cells;
    for (double c : res.clip_list) {
      for (std::int64_t T : res.T_list) {
        PrivateRun run = RunPrivate(cfg, pr.train, res.eta, T, c * root_p, seed);
        GridCell cell;
        cell.clip_multiplier = c;
        cell.T = T;
        cell.seed = seed;
        cell.audit = run.audit;
        cells.push_back(cell);
        thetas.push_back(std::move(run.theta));
      }
    }
    const TestSet test = MakeSplit(pr, cfg.test_count, seed, Stream::kTestPoints);
    const Eigen::MatrixXd loss = TestLosses(pr.features, test, thetas);
    for (std::size_t k = 0; k < cells.size(); ++k) {
      const MeanStderr st = ColumnStats(loss, static_cast<Eigen::Index>(k));
      cells[k].test_loss = st.mean;
      cells[k].stderr = st.stderr;
    }
    jobs[s] = std::move(cells);
  });

  res.mean.resize(nt, nc);
  res.stderr.resize(nt, nc);
  std::vector<std::vector<std::string>> lines;
  std::string cells_csv = "clip_multiplier,c_clip,T,mean_loss,stderr,seeds\n";
  for (std::size_t ic = 0; ic < nc; ++ic) {
    for (std::size_t it = 0; it < nt; ++it) {
      std::vector<double> vals;
      for (std::size_t s = 0; s < ns; ++s) {
        const GridCell& cell = jobs[s][ic * nt + it];
        vals.push_back(cell.test_loss);
        std::vector<std::string> f = {F(cell.clip_multiplier), I(cell.T),
                                      U(cell.seed), F(cell.test_loss),
                                      F(cell.stderr)};
        const auto a = AuditFields(cell.audit);
        f.insert(f.end(), a.begin(), a.end());
        lines.push_back(std::move(f));
        res.rows.push_back(cell);
      }
      const MeanStderr st = Summarize(vals);
      res.mean(it, ic) = st.mean;
      res.stderr(it, ic) = st.stderr;
      cells_csv += CsvLine({F(res.clip_list[ic]),
                            F(res.clip_list[ic] *
                              std::sqrt(static_cast<double>(cfg.p))),
                            I(res.T_list[it]), F(st.mean), F(st.stderr),
                            I(static_cast<std::int64_t>(ns))}) +
                   "\n";
    }
  }
  // Axes are sorted so corners are taken at the extreme values.
  const auto cmin = std::min_element(res.clip_list.begin(), res.clip_list.end()) -
                    res.clip_list.begin();
  const auto cmax = std::max_element(res.clip_list.begin(), res.clip_list.end()) -
                    res.clip_list.begin();
  const auto tmin = std::min_element(res.T_list.begin(), res.T_list.end()) -
                    res.T_list.begin();
  const auto tmax = std::max_element(res.T_list.begin(), res.T_list.end()) -
                    res.T_list.begin();
  res.corners.bottom_left = res.mean(tmin, cmin);
  res.corners.bottom_right = res.mean(tmin, cmax);
  res.corners.top_left = res.mean(tmax, cmin);
  res.corners.top_right = res.mean(tmax, cmax);
  res.csv = CsvText(Task::kGridClipT, lines);
  res.cells_csv = std::move(cells_csv);
  return res;
}

CalibrationReport RunCalibrate(const ExperimentConfig& cfg) {
  cfg.Validate();
  CalibrationReport r;
  r.n = cfg.n;
  r.d = cfg.d;
  r.p = cfg.p;
  const PrivacyBudget b = cfg.budget();
  r.epsilon = b.epsilon;
  r.delta = b.delta;
  r.hyper = ScaledHyperparams(cfg.n, cfg.d, cfg.p, b);
  return r;
}

DiagnoseReport RunDiagnose(const ExperimentConfig& cfg) {
  cfg.Validate();
  DiagnoseReport r;
  r.n = cfg.n;
  r.d = cfg.d;
  r.p = cfg.p;
  r.regime = RegimeCheck(cfg.n, cfg.d, cfg.p);
  const std::uint64_t seed = cfg.seeds.front();
  const Problem pr = MakeProblem(cfg, cfg.p, seed);
  const SpectralDecomp sd = Decompose(pr.train.features);
  if (cfg.n > cfg.d) r.spectrum = MakeSpectrumReport(sd, cfg.d);
  if (cfg.certificate) {
    const PrivacyBudget b = cfg.budget();
    const ScalingHyperparams h = ScaledHyperparams(cfg.n, cfg.d, cfg.p, b);
    const double eta = EtaFor(cfg, sd.lambda_max());
    DPGDConfig dc;
    dc.eta = eta;
    dc.steps = std::max<std::int64_t>(
        1, static_cast<std::int64_t>(std::ceil(h.tau / eta)));
    dc.c_clip = h.c_clip;
    dc.sigma = CalibrateSigma(b, eta * dc.steps);
    Rng rng = MakeRng(seed, Stream::kAlgorithmNoise);
    const Trajectory traj = RunDpGd(dc, pr.train, rng);
    r.certificate = ClipFreeCertificate(traj, pr.train, dc.c_clip);
    r.clip_fraction = static_cast<double>(traj.total_clip_events()) /
                      (static_cast<double>(cfg.n) * dc.steps);
  }
  return r;
}

std::string ToJson(const CalibrationReport& r) {
  json j;
  j["n"] = r.n;
  j["d"] = r.d;
  j["p"] = r.p;
  j["epsilon"] = r.epsilon;
  j["delta"] = r.delta;
  j["sigma"] = r.hyper.sigma;
  j["Sigma"] = r.hyper.Sigma;
  j["tau"] = r.hyper.tau;
  j["C_clip"] = r.hyper.c_clip;
  return j.dump(2);
}

std::string ToJson(const DiagnoseReport& r) {
  json j;
  j["n"] = r.n;
  j["d"] = r.d;
  j["p"] = r.p;
  json conds = json::array();
  for (const auto& c : r.regime.conditions) {
    conds.push_back({{"condition", c.name},
                     {"ratio_expression", c.expression},
                     {"ratio", c.ratio},
                     {"status", ToString(c.status)}});
  }
  j["regime"] = conds;
  j["regime_all_inside"] = r.regime.all_inside();
  if (r.spectrum) {
    j["spectrum"] = {{"lambda_d", r.spectrum->lambda_d},
                     {"lambda_d_plus_1", r.spectrum->lambda_d_plus_1},
                     {"lambda_min", r.spectrum->lambda_min},
                     {"gap_ratio", r.spectrum->gap_ratio},
                     {"lambda_min_over_p",
                      r.spectrum->lambda_min / static_cast<double>(r.p)}};
  }
  if (r.certificate) {
    j["certificate"] = {{"clip_free", r.certificate->clip_free},
                        {"worst_margin", r.certificate->worst_margin},
                        {"worst_step", r.certificate->worst_step},
                        {"worst_sample", r.certificate->worst_sample},
                        {"clip_fraction", r.clip_fraction}};
  }
  return j.dump(2);
}

TaskOutput RunTask(const ExperimentConfig& cfg) {
  cfg.Validate();
  TaskOutput out;
  const std::string name = TaskName(cfg.task);
  if (cfg.task != Task::kCalibrate) {
    std::filesystem::create_directories(cfg.output_dir);
  }
  auto write = [&](const std::string& file, const std::string& text) {
    const std::string path = TaskPath(cfg, file);
    WriteTextFile(path, text);
    out.files.push_back(path);
  };
  const std::string svg_name = name + "_" + Timestamp() + ".svg";
  json summary;
  summary["task"] = name;
  summary["config"] = json::parse(ConfigToJson(cfg));

  switch (cfg.task) {
    case Task::kSweepP: {
      const SweepPResult r = RunSweepP(cfg);
      write(name + ".csv", r.csv);
      std::vector<double> px(r.p_values.begin(), r.p_values.end());
      const std::vector<Series> series = {
          {"GD", px, r.gd_mean, r.gd_stderr},
          {"DP-GD", px, r.dp_mean, r.dp_stderr}};
      write(svg_name, LinePlotSvg(series, {"Test loss vs number of features",
                                           "p", "test loss", true, true}));
      summary["eta_rule"] = cfg.eta ? "fixed" : "eta_fraction * n / (2 lambda_max) per width and seed";
      summary["p"] = r.p_values;
      summary["gd_mean"] = r.gd_mean;
      summary["gd_stderr"] = r.gd_stderr;
      summary["dpgd_mean"] = r.dp_mean;
      summary["dpgd_stderr"] = r.dp_stderr;
      summary["tuned_clip"] = r.tuned_clip;
      summary["tuned_time"] = r.tuned_time;
      for (const auto& row : r.rows) out.any_diverged |= row.audit.diverged;
      break;
    }
    case Task::kSweepT:
    case Task::kCollapse: {
      const bool collapse = cfg.task == Task::kCollapse;
      CollapseResult c;
      if (collapse) {
        c = RunCollapse(cfg);
      } else {
        c.sweep = RunSweepT(cfg);
      }
      const SweepTResult& r = c.sweep;
      write(name + ".csv", collapse ? c.csv : r.csv);
      std::vector<Series> series;
      const double d = static_cast<double>(cfg.d);
      json curves = json::array();
      for (const Curve& cv : r.curves) {
        Series s;
        s.name = "p = " + std::to_string(cv.p);
        for (std::size_t k = 0; k < cv.T.size(); ++k) {
          if (cv.T[k] == 0) continue;
          const double t = static_cast<double>(cv.T[k]);
          s.x.push_back(collapse ? r.eta * t * static_cast<double>(cv.p) / d : t);
          s.y.push_back(cv.mean[k]);
          s.err.push_back(cv.stderr[k]);
        }
        series.push_back(std::move(s));
        const auto best = std::min_element(cv.mean.begin(), cv.mean.end()) -
                          cv.mean.begin();
        curves.push_back({{"p", cv.p},
                          {"T", cv.T},
                          {"mean", cv.mean},
                          {"stderr", cv.stderr},
                          {"argmin_T", cv.T[best]}});
      }
      write(svg_name,
            LinePlotSvg(series, {collapse ? "Test loss vs rescaled time"
                                          : "Test loss vs iterations",
                                 collapse ? "eta T p / d" : "T", "test loss",
                                 true, false}));
      summary["eta"] = r.eta;
      summary["curves"] = curves;
      if (collapse) {
        summary["max_discrepancy"] = c.max_discrepancy;
        summary["control_discrepancy"] = c.control_discrepancy;
        summary["grid"] = c.grid;
      }
      for (const auto& row : r.rows) out.any_diverged |= row.audit.diverged;
      break;
    }
    case Task::kGridClipT: {
      const GridResult r = RunGridClipT(cfg);
      write(name + ".csv", r.csv);
      write(name + "_cells.csv", r.cells_csv);
      std::vector<std::string> rows, cols;
      for (auto T : r.T_list) rows.push_back(std::to_string(T));
      for (double c : r.clip_list) cols.push_back(FormatDouble(c));
      write(svg_name, HeatMapSvg(r.mean, rows, cols,
                                 {"Mean test loss", "C_clip / sqrt(p)", "T",
                                  false, false, 760, 520}));
      summary["eta"] = r.eta;
      summary["p"] = r.p;
      summary["corners"] = {{"bottom_left", r.corners.bottom_left},
                            {"bottom_right", r.corners.bottom_right},
                            {"top_left", r.corners.top_left},
                            {"top_right", r.corners.top_right}};
      for (const auto& row : r.rows) out.any_diverged |= row.audit.diverged;
      break;
    }
    case Task::kCalibrate:
      out.summary_json = ToJson(RunCalibrate(cfg));
      return out;
    case Task::kDiagnose: {
      const DiagnoseReport r = RunDiagnose(cfg);
      std::string csv = "metric,value\n";
      for (const auto& c : r.regime.conditions) {
        csv += "\"" + c.expression + "\"," + FormatDouble(c.ratio) + "\n";
      }
      if (r.spectrum) {
        csv += "lambda_d," + FormatDouble(r.spectrum->lambda_d) + "\n";
        csv += "lambda_d_plus_1," + FormatDouble(r.spectrum->lambda_d_plus_1) + "\n";
        csv += "lambda_min," + FormatDouble(r.spectrum->lambda_min) + "\n";
        csv += "gap_ratio," + FormatDouble(r.spectrum->gap_ratio) + "\n";
      }
      if (r.certificate) {
        csv += "clip_free," + B(r.certificate->clip_free) + "\n";
        csv += "worst_margin," + FormatDouble(r.certificate->worst_margin) + "\n";
        csv += "clip_fraction," + FormatDouble(r.clip_fraction) + "\n";
      }
      write(name + ".csv", csv);
      out.summary_json = ToJson(r);
      return out;
    }
  }
  out.summary_json = summary.dump(2);
  write(name + "_summary.json", out.summary_json);
  return out;
}

}  // namespace dpflow
