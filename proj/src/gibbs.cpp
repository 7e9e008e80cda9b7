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

#include "airfl/gibbs.hpp"

#include "airfl/parallel.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <unordered_map>
#include <utility>

namespace airfl {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Solution {
  double j = kInf;
  Beamformer f;
  RisPhase theta;
  bool feasible() const { return std::isfinite(j); }
};

}  // namespace

CandidateSet neighborhood(const SelectionMask& mask) {
  CandidateSet set;
  set.masks.reserve(static_cast<std::size_t>(mask.size()) + 1);
  set.masks.push_back(mask);
  for (int m = 0; m < mask.size(); ++m) {
    SelectionMask flipped = mask;
    flipped.flip(m);
    set.masks.push_back(std::move(flipped));
  }
  return set;
}

VecR gibbs_probabilities(const VecR& j_values, double beta) {
  if (!(beta > 0.0)) throw std::invalid_argument("temperature must be positive");
  if (j_values.size() == 0) throw std::invalid_argument("no candidates");
  double j_min = kInf;
  for (int i = 0; i < j_values.size(); ++i) j_min = std::min(j_min, j_values(i));
  if (!std::isfinite(j_min))
    throw std::runtime_error("every candidate selection is infeasible");

  VecR w(j_values.size());
  for (int i = 0; i < j_values.size(); ++i)
    w(i) = std::isfinite(j_values(i)) ? std::exp(-(j_values(i) - j_min) / beta) : 0.0;
  return w / w.sum();
}

int sample_selection(const VecR& j_values, double beta, RngStream& rng) {
  return rng.categorical(gibbs_probabilities(j_values, beta));
}

GibbsResult gibbs_optimize(const ChannelRealization& ch,
                           const std::vector<double>& sample_counts,
                           const SystemParams& params, const GibbsConfig& config,
                           RngStream& rng) {
  if (config.j_max < 0) throw std::invalid_argument("j_max must be >= 0");
  if (!(config.beta0 > 0.0)) throw std::invalid_argument("beta0 must be positive");
  if (!(config.rho > 0.0 && config.rho <= 1.0))
    throw std::invalid_argument("rho must lie in (0, 1]");
  const int m_total = ch.num_devices();
  if (static_cast<int>(sample_counts.size()) != m_total)
    throw std::invalid_argument("sample_counts length does not match device count");

  const int threads = resolve_threads(config.threads);

  // Best objective seen per selection; revisits re-solve with the evolved
  // warm start and keep whichever solution scored better.
  std::unordered_map<std::string, Solution> memo;

  auto solve = [&](const SelectionMask& mask,
                   const std::optional<std::pair<Beamformer, RisPhase>>& warm) -> Solution {
    Solution sol;
    if (mask.count() == 0) return sol;  // empty selection scores +inf
    try {
      std::optional<std::pair<Beamformer, RisPhase>> init;
      if (warm && warm->first.f.size() == ch.num_antennas()) init = warm;
      const ScaState s = sca_optimize(mask, ch, sample_counts, config.inner, init);
      sol.j = d_value(mask, s.f, s.theta, ch, sample_counts, params);
      sol.f = s.f;
      sol.theta = s.theta;
    } catch (const DegenerateChannelError&) {
      sol.j = kInf;
    }
    return sol;
  };

  SelectionMask x = SelectionMask::all_active(m_total);
  std::vector<std::optional<std::pair<Beamformer, RisPhase>>> warm(
      static_cast<std::size_t>(m_total) + 1);

  GibbsResult result;
  result.mask = x;
  result.j_value = kInf;

  Solution init_sol = solve(x, std::nullopt);
  memo[x.key()] = init_sol;
  if (init_sol.feasible()) {
    warm[0] = std::make_pair(init_sol.f, init_sol.theta);
    result.mask = x;
    result.f = init_sol.f;
    result.theta = init_sol.theta;
    result.j_value = init_sol.j;
  }

  double beta = config.beta0;
  result.log.reserve(static_cast<std::size_t>(config.j_max));
  for (int iter = 1; iter <= config.j_max; ++iter) {
    beta *= config.rho;

    const CandidateSet cands = neighborhood(x);
    const int n_cand = static_cast<int>(cands.masks.size());
    std::vector<Solution> sols(static_cast<std::size_t>(n_cand));
    parallel_for_index(n_cand, threads, [&](int i) {
      sols[static_cast<std::size_t>(i)] =
          solve(cands.masks[static_cast<std::size_t>(i)], warm[static_cast<std::size_t>(i)]);
    });

    VecR j_values(n_cand);
    for (int i = 0; i < n_cand; ++i) {
      Solution& sol = sols[static_cast<std::size_t>(i)];
      auto [it, inserted] = memo.try_emplace(cands.masks[static_cast<std::size_t>(i)].key(), sol);
      if (!inserted && it->second.j < sol.j) sol = it->second;
      if (!inserted && it->second.j > sol.j) it->second = sol;
      j_values(i) = sol.j;
      if (sol.feasible()) {
        warm[static_cast<std::size_t>(i)] = std::make_pair(sol.f, sol.theta);
        if (sol.j < result.j_value) {
          result.mask = cands.masks[static_cast<std::size_t>(i)];
          result.f = sol.f;
          result.theta = sol.theta;
          result.j_value = sol.j;
        }
      }
    }

    const int pick = sample_selection(j_values, beta, rng);
    x = cands.masks[static_cast<std::size_t>(pick)];
    warm[0] = warm[static_cast<std::size_t>(pick)];

    result.log.push_back({iter, beta, x.key(), j_values(pick), result.j_value});
  }

  if (config.return_last_sample) {
    const auto it = memo.find(x.key());
    if (it != memo.end() && it->second.feasible()) {
      result.mask = x;
      result.f = it->second.f;
      result.theta = it->second.theta;
      result.j_value = it->second.j;
    }
  }

  if (!std::isfinite(result.j_value))
    throw std::runtime_error("no feasible selection was found");
  return result;
}

}  // namespace airfl
