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

#include "dpflow/dp_gd.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <iomanip>
#include <string>

#include <Eigen/Eigenvalues>

#include "dpflow/errors.h"
#include "dpflow/kernels.h"

namespace dpflow {
namespace {

// Shared by the scalar API and the aggregated kernel; assumes feat_norm > 0
// or a zero feature row (whose gradient vanishes regardless).
inline double ClippedDerivativeUnchecked(double z, double feat_norm,
                                         double c_clip) {
  const double raw = 2.0 * z;
  const double size = std::abs(raw) * feat_norm;
  if (size > c_clip) return raw * (c_clip / size);
  return raw;
}

bool IsPowerOfTwo(std::int64_t t) { return t > 0 && (t & (t - 1)) == 0; }

CheckpointPolicy ChoosePolicy(const DPGDConfig& cfg, Eigen::Index p) {
  if (cfg.checkpoint_policy) return *cfg.checkpoint_policy;
  const double values =
      static_cast<double>(p) * static_cast<double>(cfg.steps + 1);
  return values <= kFullCheckpointBudget ? CheckpointPolicy::kEveryStep
                                         : CheckpointPolicy::kGeometric;
}

// Residuals, per-sample clipping coefficients and flags at theta.
struct StepEval {
  Eigen::VectorXd residuals;
  Eigen::VectorXd coeffs;
  std::vector<std::uint8_t> flags;
  Eigen::Index clipped = 0;
};

StepEval Evaluate(const TrainingSet& ts, const Eigen::VectorXd& theta,
                  double c_clip) {
  StepEval ev;
  ev.residuals = kernels::MatVec(ts.features, theta) - ts.labels;
  const Eigen::Index n = ts.size();
  ev.coeffs.resize(n);
  ev.flags.assign(static_cast<std::size_t>(n), 0);
#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 0; i < n; ++i) {
    const double z = ev.residuals[i];
    const double fn = ts.feature_norms[i];
    ev.coeffs[i] = ClippedDerivativeUnchecked(z, fn, c_clip);
    ev.flags[static_cast<std::size_t>(i)] =
        2.0 * std::abs(z) * fn > c_clip ? 1 : 0;
  }
  for (auto f : ev.flags) ev.clipped += f;
  return ev;
}

void CheckFinite(const Eigen::VectorXd& theta, std::int64_t step) {
  const double norm = theta.norm();
  if (!std::isfinite(norm) || norm > kDivergenceNorm) {
    throw DivergenceError("iterate diverged at step " + std::to_string(step) +
                              " (|theta| = " + std::to_string(norm) + ")",
                          step);
  }
}

Trajectory RunLoop(const DPGDConfig& cfg, const TrainingSet& ts,
                   double c_clip, double sigma, Rng* rng) {
  const Eigen::Index n = ts.size();
  const Eigen::Index p = ts.num_features();
  if (cfg.theta0.size() != 0 && cfg.theta0.size() != p) {
    throw DimensionError("theta0 has dimension " +
                         std::to_string(cfg.theta0.size()) + ", expected " +
                         std::to_string(p));
  }
  Trajectory traj;
  traj.policy = ChoosePolicy(cfg, p);
  traj.eta = cfg.eta;
  traj.c_clip = c_clip;
  traj.sigma = sigma;
  traj.steps = cfg.steps;
  traj.num_samples = n;
  traj.clip_events.reserve(static_cast<std::size_t>(cfg.steps * n));

  Eigen::VectorXd theta =
      cfg.theta0.size() == 0 ? Eigen::VectorXd::Zero(p) : cfg.theta0;
  const double noise_scale =
      sigma > 0.0 ? std::sqrt(cfg.eta) * (2.0 * c_clip / static_cast<double>(n)) * sigma
                  : 0.0;
  const double inv_n = 1.0 / static_cast<double>(n);

  for (std::int64_t t = 0;; ++t) {
    StepEval ev = Evaluate(ts, theta, c_clip);
    traj.train_loss.push_back(ev.residuals.squaredNorm() * inv_n);
    traj.clip_fraction.push_back(static_cast<double>(ev.clipped) * inv_n);
    traj.theta_norm.push_back(theta.norm());
    const bool store = traj.policy == CheckpointPolicy::kEveryStep || t == 0 ||
                       IsPowerOfTwo(t) || t == cfg.steps;
    if (store) {
      traj.checkpoint_steps.push_back(t);
      traj.thetas.push_back(theta);
    }
    if (t == cfg.steps) break;

    traj.clip_events.insert(traj.clip_events.end(), ev.flags.begin(),
                            ev.flags.end());
    const Eigen::VectorXd grad = kernels::MatTVec(ts.features, ev.coeffs) * inv_n;
    theta -= cfg.eta * grad;
    if (noise_scale > 0.0) {
      Eigen::VectorXd xi = GaussianVector(p, *rng);
      theta += noise_scale * xi;
      if (cfg.record_noise) traj.noise.push_back(std::move(xi));
    } else if (cfg.record_noise) {
      traj.noise.push_back(Eigen::VectorXd::Zero(p));
    }
    CheckFinite(theta, t + 1);
  }
  return traj;
}

void PutLe(std::ostream& out, std::uint64_t value, int bytes) {
  std::array<char, 8> buf{};
  for (int k = 0; k < bytes; ++k) {
    buf[static_cast<std::size_t>(k)] = static_cast<char>((value >> (8 * k)) & 0xff);
  }
  out.write(buf.data(), bytes);
}

std::uint64_t GetLe(std::istream& in, int bytes) {
  std::array<unsigned char, 8> buf{};
  in.read(reinterpret_cast<char*>(buf.data()), bytes);
  if (!in) throw Error("checkpoint file truncated");
  std::uint64_t value = 0;
  for (int k = bytes - 1; k >= 0; --k) {
    value = (value << 8) | buf[static_cast<std::size_t>(k)];
  }
  return value;
}

}  // namespace

void DPGDConfig::Validate() const {
  if (!(eta > 0.0) || !std::isfinite(eta)) {
    throw ConfigError("eta must be positive and finite");
  }
  if (steps < 1) throw ConfigError("T must be >= 1");
  if (!(c_clip > 0.0)) throw ConfigError("c_clip must be > 0");
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
    throw ConfigError("sigma must be >= 0 and finite");
  }
  if (sigma > 0.0 && !std::isfinite(c_clip)) {
    throw ConfigError("noise with an infinite clipping constant is unbounded");
  }
}

std::int64_t Trajectory::total_clip_events() const {
  std::int64_t total = 0;
  for (auto f : clip_events) total += f;
  return total;
}

TrainingSet MakeTrainingSet(const Dataset& ds, const FeatureMap& fm) {
  return MakeTrainingSet(FeatureMatrix(fm, ds.inputs), ds.labels);
}

TrainingSet MakeTrainingSet(Eigen::MatrixXd features, Eigen::VectorXd labels) {
  if (features.rows() != labels.size()) {
    throw DimensionError("MakeTrainingSet: features and labels disagree on n");
  }
  TrainingSet ts;
  ts.feature_norms = kernels::RowNorms(features);
  ts.features = std::move(features);
  ts.labels = std::move(labels);
  return ts;
}

Eigen::VectorXd PerSampleGradient(const Eigen::VectorXd& theta,
                                  const Eigen::VectorXd& phi_i, double y_i) {
  if (theta.size() != phi_i.size()) {
    throw DimensionError("PerSampleGradient: dimension mismatch");
  }
  return 2.0 * (phi_i.dot(theta) - y_i) * phi_i;
}

ClipResult ClipGradient(const Eigen::VectorXd& g, double c_clip) {
  if (!(c_clip > 0.0)) throw ConfigError("c_clip must be > 0");
  const double norm = g.norm();
  ClipResult out;
  out.clipped = norm > c_clip;
  out.gradient = out.clipped ? Eigen::VectorXd(g / (norm / c_clip)) : g;
  return out;
}

double ClippedLossDerivative(double z, double feat_norm, double c_clip) {
  if (!(feat_norm > 0.0)) {
    throw DegenerateFeatureError("clipped loss needs a nonzero feature vector");
  }
  if (!(c_clip > 0.0)) throw ConfigError("c_clip must be > 0");
  if (z == 0.0) return 0.0;
  return 2.0 * z * std::min(1.0, c_clip / (2.0 * std::abs(z) * feat_norm));
}

Eigen::VectorXd ClippedGradient(const TrainingSet& ts,
                                const Eigen::VectorXd& theta, double c_clip,
                                std::vector<std::uint8_t>* clipped) {
  if (!(c_clip > 0.0)) throw ConfigError("c_clip must be > 0");
  StepEval ev = Evaluate(ts, theta, c_clip);
  if (clipped != nullptr) *clipped = std::move(ev.flags);
  return kernels::MatTVec(ts.features, ev.coeffs) /
         static_cast<double>(ts.size());
}

Trajectory RunDpGd(const DPGDConfig& cfg, const TrainingSet& ts, Rng& rng) {
  cfg.Validate();
  return RunLoop(cfg, ts, cfg.c_clip, cfg.sigma, &rng);
}

Trajectory RunDpGd(const DPGDConfig& cfg, const Dataset& ds,
                   const FeatureMap& fm, Rng& rng) {
  return RunDpGd(cfg, MakeTrainingSet(ds, fm), rng);
}

double LargestKernelEigenvalue(const TrainingSet& ts) {
  const Eigen::MatrixXd& phi = ts.features;
  const Eigen::MatrixXd gram = phi.rows() <= phi.cols()
                                   ? kernels::Gram(phi)
                                   : kernels::Gram(phi.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gram,
                                                        Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw NumericError("LargestKernelEigenvalue: eigensolver failed");
  }
  return solver.eigenvalues().maxCoeff();
}

double GdStabilityBound(const TrainingSet& ts) {
  return static_cast<double>(ts.size()) / LargestKernelEigenvalue(ts);
}

Trajectory RunGd(const DPGDConfig& cfg, const TrainingSet& ts,
                 std::optional<double> lambda_max) {
  DPGDConfig plain = cfg;
  plain.sigma = 0.0;
  plain.c_clip = kNoClip;
  plain.Validate();
  const double lmax = lambda_max ? *lambda_max : LargestKernelEigenvalue(ts);
  const double bound = static_cast<double>(ts.size()) / lmax;
  if (cfg.eta >= bound) {
    throw StabilityError("eta = " + std::to_string(cfg.eta) +
                             " is not below the GD stability bound " +
                             std::to_string(bound),
                         bound);
  }
  return RunLoop(plain, ts, kNoClip, 0.0, nullptr);
}

ClipDetection DetectClipping(const Eigen::VectorXd& theta,
                             const TrainingSet& ts, double c_clip) {
  if (!(c_clip > 0.0)) throw ConfigError("c_clip must be > 0");
  const Eigen::VectorXd residuals =
      kernels::MatVec(ts.features, theta) - ts.labels;
  ClipDetection out;
  out.flags.resize(static_cast<std::size_t>(ts.size()));
  out.margin = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < ts.size(); ++i) {
    const double threshold = c_clip / (2.0 * ts.feature_norms[i]);
    const double r = std::abs(residuals[i]);
    out.flags[static_cast<std::size_t>(i)] = r >= threshold ? 1 : 0;
    out.margin = std::min(out.margin, threshold - r);
  }
  return out;
}

void WriteCheckpoints(const Trajectory& traj, std::ostream& out) {
  const std::uint64_t p =
      traj.thetas.empty() ? 0 : static_cast<std::uint64_t>(traj.thetas[0].size());
  out.write("DPGD", 4);
  PutLe(out, kCheckpointVersion, 4);
  PutLe(out, p, 8);
  PutLe(out, traj.thetas.size(), 8);
  for (const Eigen::VectorXd& theta : traj.thetas) {
    for (Eigen::Index j = 0; j < theta.size(); ++j) {
      std::uint64_t bits;
      const double v = theta[j];
      std::memcpy(&bits, &v, sizeof bits);
      PutLe(out, bits, 8);
    }
  }
}

std::vector<Eigen::VectorXd> ReadCheckpoints(std::istream& in) {
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "DPGD", 4) != 0) {
    throw Error("not a DPGD checkpoint file");
  }
  const auto version = static_cast<std::uint32_t>(GetLe(in, 4));
  if (version != kCheckpointVersion) {
    throw Error("unsupported checkpoint version " + std::to_string(version));
  }
  const std::uint64_t p = GetLe(in, 8);
  const std::uint64_t count = GetLe(in, 8);
  std::vector<Eigen::VectorXd> out;
  out.reserve(count);
  for (std::uint64_t c = 0; c < count; ++c) {
    Eigen::VectorXd theta(static_cast<Eigen::Index>(p));
    for (std::uint64_t j = 0; j < p; ++j) {
      const std::uint64_t bits = GetLe(in, 8);
      double v;
      std::memcpy(&v, &bits, sizeof v);
      theta[static_cast<Eigen::Index>(j)] = v;
    }
    out.push_back(std::move(theta));
  }
  return out;
}

void WriteTrajectorySummary(const Trajectory& traj, std::ostream& out) {
  out << "step,train_loss,clip_fraction,theta_norm\n";
  out << std::setprecision(17);
  for (std::size_t t = 0; t < traj.train_loss.size(); ++t) {
    out << t << ',' << traj.train_loss[t] << ',' << traj.clip_fraction[t]
        << ',' << traj.theta_norm[t] << '\n';
  }
}

}  // namespace dpflow
