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
#include <vector>

namespace airfl {

// Unified design objective: a selection-loss term that penalizes excluded
// samples plus the worst-case inverse channel gain among selected devices,
// scaled by the noise-to-power ratio. Smaller is better; an empty selection
// evaluates to +infinity.
double d_value(const SelectionMask& mask, const Beamformer& f, const RisPhase& theta,
               const ChannelRealization& ch, const std::vector<double>& sample_counts,
               const SystemParams& params);

// Same objective evaluated from precomputed per-device squared channel gains
// |f^H h_m|^2 for the active devices (ascending index order).
double d_value_from_gains(const SelectionMask& mask, const std::vector<double>& active_gain2,
                          const std::vector<double>& sample_counts, const SystemParams& params);

// Per-round contraction factor of the expected optimality gap.
double contraction_factor(double d, const ConvexityConstants& c);

// Upper bound on the expected optimality gap after t rounds, starting from
// initial_gap at round 0. The t -> infinity limit of this expression is
// (alpha1 / omega) * d / (1 - psi) whenever psi < 1.
double loss_bound(int t, double d, const ConvexityConstants& c, double initial_gap);

// Steady-state gap figure used for design guidance; only meaningful in the
// regime d <= 1 / (2 alpha2), otherwise empty.
std::optional<double> asymptotic_gap(double d, const ConvexityConstants& c);

// Smallest alpha1 >= 0 such that every observed per-sample gradient energy
// is covered by alpha1 + alpha2 * (global gradient energy) across the
// supplied rounds. per_sample_grad2[t] holds squared per-sample gradient
// norms at round t; global_grad2[t] the squared global gradient norm.
double estimate_alpha1(const std::vector<VecR>& per_sample_grad2, const VecR& global_grad2,
                       double alpha2);
double estimate_alpha1(const VecR& max_per_sample_grad2, const VecR& global_grad2,
                       double alpha2);

// Convenience wrapper returning the (alpha1, alpha2) pair with alpha2 fixed.
std::pair<double, double> estimate_a4_constants(const VecR& max_per_sample_grad2,
                                                const VecR& global_grad2, double alpha2_fixed);

// Bound curve over a horizon, bundled with the quantities it derives from.
struct BoundEvaluation {
  double d = 0.0;
  double psi = 0.0;
  VecR per_round_bound;                 // index t holds the bound at round t, from t = 0
  std::optional<double> asymptote;
};

BoundEvaluation evaluate_bounds(double d, const ConvexityConstants& c, double initial_gap,
                                int horizon);

}  // namespace airfl
