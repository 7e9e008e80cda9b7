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
#include "airfl/rng.hpp"
#include "airfl/types.hpp"

#include <vector>

namespace airfl {

// Local update vectors whose population variance falls below this floor are
// treated as constant: the device keeps its slot but transmits zeros, and
// its mean still enters the receiver-side bias correction.
inline constexpr double kVarianceFloor = 1e-12;

struct GradientStats {
  double mean = 0.0;
  double variance = 0.0;  // population variance (divide by the vector length)

  bool degenerate() const { return variance < kVarianceFloor; }
};

GradientStats gradient_stats(const VecR& g);

// Zero-mean unit-variance symbols (g - mean) / sqrt(variance); all-zero
// output for degenerate inputs.
VecR normalize_symbols(const VecR& g, const GradientStats& stats);

// Power-optimal uplink configuration for a fixed receive beamformer and
// phase setting. Transmit coefficients invert each device's effective
// channel so the received symbols align coherently, and the common scaling
// eta is pushed to the largest value every power budget tolerates.
struct TransceiverPolicy {
  double eta = 0.0;
  std::vector<Complex> p;    // per active device, aligned with `active`
  std::vector<int> active;   // ascending device indices of the selection
};

TransceiverPolicy optimal_policy(const SelectionMask& mask, const Beamformer& f,
                                 const RisPhase& theta, const ChannelRealization& ch,
                                 const std::vector<double>& sample_counts,
                                 const std::vector<GradientStats>& stats,
                                 const SystemParams& params);

// One simulated uplink round.
//   r_hat:     real-valued aggregate delivered to the model update
//   e2_sample: realized squared noise-and-misalignment error of the estimate
//              normalized by the total selected sample count, with both
//              receiver noise quadratures counted (the imaginary part of the
//              matched-filter output is discarded for r_hat but still
//              contributes to the error energy that the analytic expression
//              accounts for)
struct AggregationResult {
  VecR r_hat;
  double e2_sample = 0.0;
};

AggregationResult simulate_uplink(const std::vector<VecR>& symbols,
                                  const TransceiverPolicy& policy, const Beamformer& f,
                                  const RisPhase& theta, const ChannelRealization& ch,
                                  const std::vector<GradientStats>& stats,
                                  const std::vector<double>& sample_counts,
                                  const SystemParams& params, int dim, RngStream& rng);

// Expected squared aggregation error of the optimal policy, normalized by
// the squared total selected sample count; linear in the noise power and
// inversely proportional to the power budget.
double aggregation_mse(const SelectionMask& mask, const Beamformer& f, const RisPhase& theta,
                       const ChannelRealization& ch, const std::vector<double>& sample_counts,
                       const std::vector<GradientStats>& stats, const SystemParams& params,
                       int dim);

}  // namespace airfl
