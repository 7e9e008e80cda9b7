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

#include "airfl/objective.hpp"
#include "airfl/rng.hpp"
#include "airfl/sca.hpp"
#include "airfl/types.hpp"

#include <string>
#include <vector>

namespace airfl {

// Annealed stochastic search over device selections. Each iteration scores
// the current selection and its single-flip neighbors by the design
// objective (with beamformer and phases re-optimized per candidate), then
// samples the next state from a Boltzmann distribution whose temperature
// decays geometrically. The reported solution is the best candidate ever
// scored, not the final random state.

struct CandidateSet {
  std::vector<SelectionMask> masks;  // masks[0] is the unmodified selection
};

CandidateSet neighborhood(const SelectionMask& mask);

// Boltzmann weights exp(-J/beta) normalized over the candidates, computed
// with a max-shift so that arbitrarily scaled objectives stay stable.
// Candidates with J = +infinity get probability exactly 0.
VecR gibbs_probabilities(const VecR& j_values, double beta);

int sample_selection(const VecR& j_values, double beta, RngStream& rng);

struct GibbsConfig {
  double beta0 = 1.0;
  double rho = 0.9;   // temperature decay per iteration
  int j_max = 50;
  ScaConfig inner;
  bool return_last_sample = false;  // report the final chain state, not the incumbent
  int threads = 0;                  // 0: resolve from environment, else 1
};

struct GibbsLogRow {
  int iter = 0;
  double beta = 0.0;
  std::string mask_key;    // selection the chain moved to ('0'/'1' per device)
  double j_sampled = 0.0;  // objective of the state the chain moved to
  double j_best = 0.0;     // incumbent objective after this iteration
};

struct GibbsResult {
  SelectionMask mask;
  Beamformer f;
  RisPhase theta;
  double j_value = 0.0;
  std::vector<GibbsLogRow> log;
};

GibbsResult gibbs_optimize(const ChannelRealization& ch,
                           const std::vector<double>& sample_counts,
                           const SystemParams& params, const GibbsConfig& config,
                           RngStream& rng);

}  // namespace airfl
