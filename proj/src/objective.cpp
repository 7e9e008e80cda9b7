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

#include "airfl/objective.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace airfl {

double d_value_from_gains(const SelectionMask& mask, const std::vector<double>& active_gain2,
                          const std::vector<double>& sample_counts, const SystemParams& params) {
  const int m_total = mask.size();
  if (static_cast<int>(sample_counts.size()) != m_total)
    throw std::invalid_argument("sample_counts length does not match device count");

  const auto active = mask.active_indices();
  if (active.empty()) return std::numeric_limits<double>::infinity();
  if (active.size() != active_gain2.size())
    throw std::invalid_argument("one channel gain per active device is required");

  double k_total = 0.0;
  for (double k : sample_counts) k_total += k;
  if (k_total <= 0.0) throw std::invalid_argument("total sample count must be positive");

  double k_sel = 0.0;
  double worst = 0.0;
  for (std::size_t i = 0; i < active.size(); ++i) {
    const double k = sample_counts[static_cast<std::size_t>(active[i])];
    k_sel += k;
    worst = std::max(worst, k * k / active_gain2[i]);
  }

  const double excluded = (k_total - k_sel) / k_total;
  return 4.0 * excluded * excluded +
         params.noise_power * worst / (params.max_power * k_sel * k_sel);
}

double d_value(const SelectionMask& mask, const Beamformer& f, const RisPhase& theta,
               const ChannelRealization& ch, const std::vector<double>& sample_counts,
               const SystemParams& params) {
  if (mask.size() != ch.num_devices())
    throw std::invalid_argument("selection mask length does not match device count");
  check_beamformer(f, ch.num_antennas());
  check_phases(theta, ch.num_ris_elements());

  const auto active = mask.active_indices();
  std::vector<double> gain2;
  gain2.reserve(active.size());
  for (int m : active)
    gain2.push_back(std::norm(f.f.dot(effective_channel(ch, m, theta.theta))));
  return d_value_from_gains(mask, gain2, sample_counts, params);
}

double contraction_factor(double d, const ConvexityConstants& c) {
  c.validate();
  if (!(d >= 0.0)) throw std::invalid_argument("objective value must be >= 0");
  return 1.0 - c.mu / c.omega + 2.0 * c.mu * c.alpha2 * d / c.omega;
}

double loss_bound(int t, double d, const ConvexityConstants& c, double initial_gap) {
  if (t < 0) throw std::invalid_argument("round index must be >= 0");
  if (initial_gap < 0) throw std::invalid_argument("initial gap must be >= 0");
  const double psi = contraction_factor(d, c);
  const double drive = c.alpha1 * d / c.omega;
  // Exact unroll of gap_{s+1} <= psi gap_s + drive; the geometric sum
  // collapses to t when psi is numerically 1.
  double series;
  const double psi_pow = std::pow(psi, t);
  if (std::abs(1.0 - psi) < 1e-15)
    series = static_cast<double>(t);
  else
    series = (1.0 - psi_pow) / (1.0 - psi);
  return drive * series + psi_pow * initial_gap;
}

std::optional<double> asymptotic_gap(double d, const ConvexityConstants& c) {
  c.validate();
  if (!(d >= 0.0)) throw std::invalid_argument("objective value must be >= 0");
  if (c.alpha2 > 0.0 && d > 1.0 / (2.0 * c.alpha2)) return std::nullopt;
  return c.alpha1 * d / (c.omega - c.mu + 2.0 * c.mu * c.alpha2 * d);
}

double estimate_alpha1(const VecR& max_per_sample_grad2, const VecR& global_grad2,
                       double alpha2) {
  if (max_per_sample_grad2.size() != global_grad2.size())
    throw std::invalid_argument("per-round maxima and global norms must align");
  if (max_per_sample_grad2.size() == 0)
    throw std::invalid_argument("at least one round of gradient data is required");
  if (alpha2 < 0) throw std::invalid_argument("alpha2 must be >= 0");
  double worst = 0.0;
  for (int t = 0; t < max_per_sample_grad2.size(); ++t)
    worst = std::max(worst, max_per_sample_grad2(t) - alpha2 * global_grad2(t));
  return worst;
}

double estimate_alpha1(const std::vector<VecR>& per_sample_grad2, const VecR& global_grad2,
                       double alpha2) {
  if (static_cast<int>(per_sample_grad2.size()) != global_grad2.size())
    throw std::invalid_argument("per-round samples and global norms must align");
  VecR maxima(global_grad2.size());
  for (std::size_t t = 0; t < per_sample_grad2.size(); ++t) {
    if (per_sample_grad2[t].size() == 0)
      throw std::invalid_argument("round without per-sample gradient data");
    maxima(static_cast<int>(t)) = per_sample_grad2[t].maxCoeff();
  }
  return estimate_alpha1(maxima, global_grad2, alpha2);
}

std::pair<double, double> estimate_a4_constants(const VecR& max_per_sample_grad2,
                                                const VecR& global_grad2, double alpha2_fixed) {
  if (!(alpha2_fixed > 0)) throw std::invalid_argument("alpha2 must be positive");
  return {estimate_alpha1(max_per_sample_grad2, global_grad2, alpha2_fixed), alpha2_fixed};
}

BoundEvaluation evaluate_bounds(double d, const ConvexityConstants& c, double initial_gap,
                                int horizon) {
  if (horizon < 1) throw std::invalid_argument("horizon must be >= 1");
  BoundEvaluation out;
  out.d = d;
  out.psi = contraction_factor(d, c);
  out.per_round_bound.resize(horizon);
  for (int t = 0; t < horizon; ++t)
    out.per_round_bound(t) = loss_bound(t, d, c, initial_gap);
  out.asymptote = asymptotic_gap(d, c);
  return out;
}

}  // namespace airfl
