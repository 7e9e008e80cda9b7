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

#include "airfl/channel.hpp"
#include "airfl/types.hpp"

#include <optional>
#include <utility>
#include <vector>

namespace airfl {

// Minimizes max_m -|f^H h_m(theta)|^2 / K_m^2 over the unit-norm beamformer
// and unit-modulus phases by successive convex approximation: each round
// linearizes the concave objective at the current iterate, solves the convex
// surrogate through its dual, and re-centers.

// Linearization data at an expansion point (f_i, theta_i). Entries are
// indexed by position in `active` (ascending device order).
struct SurrogateCoeffs {
  std::vector<VecC> a;   // beamformer-side, length N each
  std::vector<VecC> b;   // phase-side, length L each
  std::vector<double> c; // scalar offsets
  std::vector<int> active;
  double tau = 1.0;
};

SurrogateCoeffs surrogate_coeffs(const Beamformer& f, const RisPhase& theta,
                                 const SelectionMask& mask, const ChannelRealization& ch,
                                 double tau);

struct DualWeights {
  VecR zeta;        // per active device, nonnegative, sum K_m^2 zeta_m = 1
  double value = 0.0;
  int iters = 0;
};

struct DualSolverConfig {
  int max_iters = 1500;
  double step_scale = 1.0;
  double tol = 1e-12;     // stop when the incumbent stalls by less than this
  int patience = 200;     // consecutive stalled iterations before stopping
  bool polish = false;    // derivative-free refinement after the ascent
};

// Maximizes the concave dual of the surrogate problem over the scaled
// simplex by projected subgradient ascent with incumbent tracking.
DualWeights solve_dual(const SurrogateCoeffs& coeffs, const std::vector<double>& sample_counts,
                       const DualSolverConfig& config);

// Dual objective at a given weight vector (used by tests and diagnostics).
double dual_objective(const VecR& zeta, const SurrogateCoeffs& coeffs);

// Recover the primal pair from dual weights. Zero combined vectors fall
// back to the expansion point's beamformer / leave the phase at +1.
std::pair<Beamformer, RisPhase> primal_update(const VecR& zeta, const SurrogateCoeffs& coeffs,
                                              const Beamformer& fallback_f);

// Objective the iteration minimizes (the d objective's channel term with the
// sign flipped and without system constants): max over active devices of
// -|f^H h_m(theta)|^2 / K_m^2.
double sca_objective(const SelectionMask& mask, const ChannelRealization& ch,
                     const std::vector<double>& sample_counts, const Beamformer& f,
                     const RisPhase& theta);

struct ScaConfig {
  double tau = 1.0;
  int max_iters = 100;
  double epsilon = 0.01;   // relative objective-change stopping threshold
  bool return_last = false;  // report the final iterate instead of the incumbent
  DualSolverConfig dual;
};

struct ScaState {
  Beamformer f;
  RisPhase theta;
  double objective = 0.0;       // objective at (f, theta)
  double best_objective = 0.0;  // incumbent over all iterates
  double last_objective = 0.0;  // final iterate
  int iters = 0;
  bool converged = false;  // stopped by the epsilon criterion
};

// Default starting point: all-ones phases and the matched filter of the
// device that binds the objective there (largest K_m^2-weighted inverse
// channel energy; ties to the lowest index).
std::pair<Beamformer, RisPhase> default_init(const SelectionMask& mask,
                                             const ChannelRealization& ch,
                                             const std::vector<double>& sample_counts);

ScaState sca_optimize(const SelectionMask& mask, const ChannelRealization& ch,
                      const std::vector<double>& sample_counts, const ScaConfig& config,
                      std::optional<std::pair<Beamformer, RisPhase>> init = std::nullopt);

// Snap each phase to the nearest of 2^bits uniformly spaced unit-modulus
// values; exact midpoints resolve toward the smaller grid index.
RisPhase project_phases(const RisPhase& theta, int bits);

}  // namespace airfl
