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

#include "airfl/gibbs.hpp"
#include "airfl/types.hpp"

#include <cstdint>
#include <vector>

namespace airfl {

// Self-check suites shared by the command-line `validate` subcommands and
// the release gate. Each suite runs randomized instances, records worst-case
// deviations, and reports pass/fail against the tolerances pinned here.

// Optimality and accuracy of the closed-form transceiver policy: a scaling
// grid search with channel-inversion alignment must not beat the closed form
// by more than half a percent, Monte-Carlo error energy must match the
// analytic expression, alignment must hold exactly, and some device must
// transmit at full power.
struct PolicyCheckOptions {
  int instances = 20;
  int grid_points = 200;
  int mc_runs = 100000;  // full aggregation rounds per instance
  int dim = 6;           // aggregation slots per round
  std::uint64_t seed = 2026;
};

struct PolicyCheckReport {
  int instances = 0;
  double worst_grid_excess = 0.0;    // (closed - best grid) / closed
  double worst_mc_rel = 0.0;         // |MC mean - analytic| / analytic
  double worst_alignment = 0.0;      // channel-inversion residual
  double worst_power_excess = 0.0;   // max |p|^2 - budget (W)
  double worst_binding_gap = 0.0;    // (budget - max |p|^2) / budget
  bool grid_ok = false;
  bool mc_ok = false;
  bool alignment_ok = false;
  bool power_ok = false;
  bool pass = false;
  double seconds = 0.0;
};

PolicyCheckReport validate_policy(const PolicyCheckOptions& options);

// Zero receiver noise must make the aggregated estimate reproduce the ideal
// weighted gradient sum to numerical precision.
struct NoiselessCheckOptions {
  int instances = 20;
  int dim = 16;
  std::uint64_t seed = 2027;
};

struct NoiselessCheckReport {
  int instances = 0;
  double worst_rel = 0.0;
  bool pass = false;
  double seconds = 0.0;
};

NoiselessCheckReport validate_noiseless(const NoiselessCheckOptions& options);

// Sampling distribution of the annealed selection search: empirical
// candidate frequencies must match the Boltzmann weights, infeasible
// candidates must never be drawn, and the temperature trace must follow the
// geometric schedule.
struct SamplerCheckOptions {
  int draws = 100000;
  std::uint64_t seed = 2028;
};

struct SamplerCheckReport {
  double two_point_exact_err = 0.0;  // closed-form weight error
  double two_point_freq_dev = 0.0;   // max |empirical - expected|
  double multi_freq_dev = 0.0;
  double infeasible_prob = 0.0;      // must be exactly zero
  double worst_beta_rel = 0.0;
  bool pass = false;
  double seconds = 0.0;
};

SamplerCheckReport validate_sampler(const SamplerCheckOptions& options);

// Beamformer/phase optimizer quality: the iteration must match or beat a
// large random search, keep every iterate feasible, produce dual values that
// agree with a fine simplex grid for three-device instances, and satisfy
// the surrogate tangency and equality-attainment identities.
struct SolverCheckOptions {
  int instances = 20;
  int random_samples = 10000;
  int dual_instances = 5;
  int grid_resolution = 1000;  // simplex grid step 1/resolution
  std::uint64_t seed = 2029;
};

struct SolverCheckReport {
  int instances = 0;
  double worst_excess = 0.0;       // solver objective - random-search best
  double worst_feasibility = 0.0;  // unit-norm / unit-modulus deviation
  double worst_dual_rel = 0.0;     // |solver - grid| / |grid|
  double worst_tangency = 0.0;
  double worst_attainment = 0.0;   // equality-case Cauchy-Schwarz residual
  bool excess_ok = false;
  bool feasibility_ok = false;
  bool dual_ok = false;
  bool identities_ok = false;
  bool pass = false;
  double seconds = 0.0;
};

SolverCheckReport validate_solver(const SolverCheckOptions& options);

// Convergence-bound dominance and steady-state accuracy on a ridge task
// trained over the simulated uplink: the per-round mean optimality gap over
// independent noise trajectories must stay below the analytic bound, and
// the tail-averaged gap must stay within three standard errors of the
// steady-state expression (which requires d <= 1 / (2 alpha2)).
struct BoundCheckOptions {
  int dim = 20;
  int devices = 10;
  int total_samples = 2000;
  int antennas = 4;
  int ris_elements = 16;
  int rounds = 200;
  int trajectories = 100;
  int tail_start = 180;  // 1-based round range for the tail average
  int tail_end = 200;
  // Chosen so the design objective d stays inside the steady-state regime
  // d <= 1 / (2 alpha2) for this scenario.
  double noise_power = 1e-11;
  std::uint64_t seed = 2030;
  GibbsConfig optimizer;
};

struct BoundCheckReport {
  double d = 0.0;
  double psi = 0.0;
  double mu = 0.0;
  double omega = 0.0;
  double alpha1 = 0.0;
  double alpha2 = 2.0;
  double initial_gap = 0.0;
  bool d_in_range = false;          // d <= 1 / (2 alpha2)
  double max_violation = 0.0;       // max over rounds of mean gap - bound
  double max_violation_rel = 0.0;
  double tail_mean = 0.0;
  double tail_se = 0.0;
  double asymptote = 0.0;
  bool dominance_ok = false;
  bool tail_ok = false;
  bool pass = false;
  double seconds = 0.0;
  VecR mean_gap;   // per round
  VecR bound;      // per round (same indexing as mean_gap)
};

BoundCheckReport validate_bound(const BoundCheckOptions& options);

}  // namespace airfl
