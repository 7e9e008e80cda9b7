// SPDX-License-Identifier: Apache-2.0
//
// airfl - over-the-air federated learning with reconfigurable intelligent surfaces
// Copyright (C) 2026 the airfl contributors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

#include "airfl/aggregation.hpp"
#include "airfl/gibbs.hpp"
#include "airfl/objective.hpp"
#include "airfl/rng.hpp"
#include "airfl/types.hpp"

#include <iosfwd>
#include <optional>
#include <utility>
#include <vector>

namespace airfl {

// Desk-scale strongly convex learning tasks with exact (ridge) or bounded
// (logistic) convexity constants, so that the convergence theory can be
// checked rather than assumed.

enum class TaskKind { kRidge, kLogistic };

struct FlTask {
  TaskKind kind = TaskKind::kRidge;
  int dim = 0;
  double reg = 0.1;  // ridge regularizer weight, part of the per-sample loss

  std::vector<MatR> x;  // per device: K_m rows, dim columns
  std::vector<VecR> y;  // ridge targets, or +-1 labels for logistic
  std::vector<double> sample_counts;
  double total_samples = 0.0;

  ConvexityConstants constants;  // alpha1/alpha2 filled by the caller later
  VecR w_star;
  double f_star = 0.0;

  // Quadratic-task caches: global A w - b gradient form and per-device parts.
  MatR hess;
  VecR lin;
  double offset = 0.0;
  std::vector<MatR> hess_m;
  std::vector<VecR> lin_m;
  std::vector<VecR> row_norms2;  // squared feature-row norms per device

  int num_devices() const { return static_cast<int>(x.size()); }
};

FlTask make_task(TaskKind kind, int dim, const std::vector<double>& per_device_counts,
                 RngStream& rng, double reg = 0.1);
FlTask make_task_from_data(TaskKind kind, std::vector<MatR> x, std::vector<VecR> y,
                           double reg = 0.1);

double global_loss(const FlTask& task, const VecR& w);
VecR global_gradient(const FlTask& task, const VecR& w);
VecR local_gradient(const FlTask& task, int m, const VecR& w);

// Squared per-sample gradient norms at w, one entry per sample of device m.
VecR per_sample_grad2(const FlTask& task, int m, const VecR& w);
// Largest squared per-sample gradient norm across every device.
double max_per_sample_grad2(const FlTask& task, const VecR& w);

// Sequential pass over a random equal-size batch partition of device m's
// data (last batch smaller when B does not divide K_m); returns the
// effective gradient (w - w_end) / lambda. A single batch (B >= K_m)
// reproduces local_gradient exactly.
VecR local_minibatch_update(const FlTask& task, int m, const VecR& w, int batch_size,
                            double lambda, RngStream& rng);

VecR global_update(const VecR& w, const VecR& r_hat, double active_sum, double lambda);

// e1 = grad_F - r/active_sum (selection error), e2 = (r - r_hat)/active_sum
// (aggregation error); e1 + e2 reconstructs the full update error exactly.
std::pair<VecR, VecR> error_decomposition(const VecR& grad_f, const VecR& r,
                                          const VecR& r_hat, double active_sum);

enum class PolicyKind { kOptimized, kErrorFree, kSelectAllNoRis, kRandomPhases };

struct PolicySource {
  PolicyKind kind = PolicyKind::kOptimized;
  // Optional precomputed solution for kOptimized on the initial channel
  // draw; when absent the optimizer runs before round 1.
  std::optional<GibbsResult> solution;
  GibbsConfig optimizer;       // used whenever a (re-)optimization is needed
  ScaConfig beamformer_only;   // inner solve for the no-surface baselines
  int phase_bits = 0;          // > 0: project optimized phases to 2^b levels
};

struct ChannelSchedule {
  int block_period = 0;  // 0: static channel; else redraw every `period` rounds
};

struct TrainContext {
  SystemParams params;
  Geometry geometry;
  SmallScaleModel model;
  ChannelSchedule schedule;
};

struct TrainConfig {
  int rounds = 200;
  double learning_rate = 0.0;  // 0: task.constants.learning_rate()
  int batch_size = 0;          // 0: exact local batch gradients
  bool collect_a4 = false;     // record max per-sample gradient energy per round
  VecR w0;                     // empty: zero vector
};

struct TrainingTrace {
  VecR loss;        // F(w_t) after the round-t update
  VecR gap;         // F(w_t) - F(w*)
  VecR grad_norm2;  // squared global gradient norm at w_t
  VecR e1_sq;       // realized selection-error energy during round t
  VecR e2_sq;       // realized aggregation-error energy during round t
  std::vector<int> selected;
  VecR d_value;     // design objective in force during round t
  VecR w_final;

  // Filled when collect_a4 is set: max per-sample and global gradient
  // energies at the pre-update iterates w_0 .. w_{T-1}.
  VecR max_sample_grad2;
  VecR global_grad2_pre;

  void write_csv(std::ostream& os) const;
};

// Run T rounds of federated training over the simulated uplink. The channel
// is drawn from ctx (or taken from `initial`) and redrawn per the schedule;
// policies are rebuilt at each redraw, re-running the optimizer for the
// kOptimized source as block fading requires.
TrainingTrace run_training(const FlTask& task, const PolicySource& source,
                           const TrainContext& ctx, const TrainConfig& cfg, RngStream& rng,
                           std::optional<ChannelRealization> initial = std::nullopt);

}  // namespace airfl
