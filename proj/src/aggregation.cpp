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

#include "airfl/aggregation.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace airfl {

namespace {

// Effective channel gains below this are indistinguishable from a dead link.
constexpr double kGainFloor = 1e-280;

void check_round_inputs(const SelectionMask& mask, const ChannelRealization& ch,
                        const std::vector<double>& sample_counts,
                        const std::vector<GradientStats>& stats) {
  const int m_total = ch.num_devices();
  if (mask.size() != m_total)
    throw std::invalid_argument("selection mask length does not match device count");
  if (static_cast<int>(sample_counts.size()) != m_total)
    throw std::invalid_argument("sample_counts length does not match device count");
  if (static_cast<int>(stats.size()) != m_total)
    throw std::invalid_argument("stats length does not match device count");
  for (int m = 0; m < m_total; ++m)
    if (mask.active(m) && sample_counts[static_cast<std::size_t>(m)] <= 0)
      throw std::invalid_argument("active devices must hold a positive sample count");
}

}  // namespace

GradientStats gradient_stats(const VecR& g) {
  if (g.size() == 0) throw std::invalid_argument("cannot take statistics of an empty vector");
  GradientStats s;
  s.mean = g.mean();
  s.variance = (g.array() - s.mean).square().sum() / static_cast<double>(g.size());
  return s;
}

VecR normalize_symbols(const VecR& g, const GradientStats& stats) {
  if (stats.degenerate()) return VecR::Zero(g.size());
  return (g.array() - stats.mean) / std::sqrt(stats.variance);
}

TransceiverPolicy optimal_policy(const SelectionMask& mask, const Beamformer& f,
                                 const RisPhase& theta, const ChannelRealization& ch,
                                 const std::vector<double>& sample_counts,
                                 const std::vector<GradientStats>& stats,
                                 const SystemParams& params) {
  check_round_inputs(mask, ch, sample_counts, stats);
  check_beamformer(f, ch.num_antennas());
  check_phases(theta, ch.num_ris_elements());

  TransceiverPolicy policy;
  policy.active = mask.active_indices();
  if (policy.active.empty()) throw std::invalid_argument("selection mask is empty");

  // The shared scaling is capped by the tightest power budget among the
  // devices that actually modulate symbols.
  std::vector<Complex> gains(policy.active.size());
  double eta = std::numeric_limits<double>::infinity();
  bool any_transmitting = false;
  for (std::size_t i = 0; i < policy.active.size(); ++i) {
    const int m = policy.active[i];
    const VecC h = effective_channel(ch, m, theta.theta);
    const Complex c = f.f.dot(h);  // Eigen's dot conjugates the left argument
    gains[i] = c;
    if (stats[static_cast<std::size_t>(m)].degenerate()) continue;
    const double gain2 = std::norm(c);
    if (!(gain2 >= kGainFloor))
      throw DegenerateChannelError("effective channel of device " + std::to_string(m) +
                                   " is numerically zero");
    const double k = sample_counts[static_cast<std::size_t>(m)];
    const double nu2 = stats[static_cast<std::size_t>(m)].variance;
    eta = std::min(eta, params.max_power * gain2 / (k * k * nu2));
    any_transmitting = true;
  }
  if (!any_transmitting) eta = 1.0;  // nothing is modulated; scaling is arbitrary

  policy.eta = eta;
  policy.p.resize(policy.active.size());
  const double sqrt_eta = std::sqrt(eta);
  for (std::size_t i = 0; i < policy.active.size(); ++i) {
    const int m = policy.active[i];
    if (stats[static_cast<std::size_t>(m)].degenerate()) {
      policy.p[i] = Complex(0.0, 0.0);
      continue;
    }
    const double k = sample_counts[static_cast<std::size_t>(m)];
    const double nu = std::sqrt(stats[static_cast<std::size_t>(m)].variance);
    policy.p[i] = k * sqrt_eta * nu * std::conj(gains[i]) / std::norm(gains[i]);
  }
  return policy;
}

AggregationResult simulate_uplink(const std::vector<VecR>& symbols,
                                  const TransceiverPolicy& policy, const Beamformer& f,
                                  const RisPhase& theta, const ChannelRealization& ch,
                                  const std::vector<GradientStats>& stats,
                                  const std::vector<double>& sample_counts,
                                  const SystemParams& params, int dim, RngStream& rng) {
  if (dim <= 0) throw std::invalid_argument("aggregation dimension must be positive");
  check_beamformer(f, ch.num_antennas());
  check_phases(theta, ch.num_ris_elements());
  if (symbols.size() != policy.active.size())
    throw std::invalid_argument("one symbol vector per active device is required");
  if (!(policy.eta > 0.0))
    throw std::invalid_argument("policy scaling must be positive");

  double k_sum = 0.0;
  double g_bar = 0.0;
  std::vector<Complex> z(policy.active.size());  // per-device post-beamforming amplitude
  for (std::size_t i = 0; i < policy.active.size(); ++i) {
    const int m = policy.active[i];
    if (symbols[i].size() != dim)
      throw std::invalid_argument("symbol vector length does not match dimension");
    const VecC h = effective_channel(ch, m, theta.theta);
    z[i] = f.f.dot(h) * policy.p[i];
    const double k = sample_counts.at(static_cast<std::size_t>(m));
    k_sum += k;
    g_bar += k * stats.at(static_cast<std::size_t>(m)).mean;
  }

  const double sqrt_eta = std::sqrt(policy.eta);
  const int n_ant = ch.num_antennas();
  const bool noisy = params.noise_power > 0.0;

  AggregationResult out;
  out.r_hat.resize(dim);
  double err2 = 0.0;
  for (int d = 0; d < dim; ++d) {
    Complex acc(0.0, 0.0);
    double truth = g_bar;
    for (std::size_t i = 0; i < policy.active.size(); ++i) {
      const int m = policy.active[i];
      const double s = symbols[i](d);
      acc += z[i] * s;
      const auto& st = stats[static_cast<std::size_t>(m)];
      if (!st.degenerate())
        truth += sample_counts[static_cast<std::size_t>(m)] * std::sqrt(st.variance) * s;
    }
    if (noisy) {
      const VecC noise = rng.cnormal_vector(n_ant, params.noise_power);
      acc += f.f.dot(noise);
    }
    const Complex estimate = acc / sqrt_eta + g_bar;
    out.r_hat(d) = estimate.real();
    err2 += std::norm(estimate - truth);
  }
  out.e2_sample = err2 / (k_sum * k_sum);
  return out;
}

double aggregation_mse(const SelectionMask& mask, const Beamformer& f, const RisPhase& theta,
                       const ChannelRealization& ch, const std::vector<double>& sample_counts,
                       const std::vector<GradientStats>& stats, const SystemParams& params,
                       int dim) {
  check_round_inputs(mask, ch, sample_counts, stats);
  check_beamformer(f, ch.num_antennas());
  check_phases(theta, ch.num_ris_elements());
  if (dim <= 0) throw std::invalid_argument("aggregation dimension must be positive");

  const auto active = mask.active_indices();
  if (active.empty()) throw std::invalid_argument("selection mask is empty");
  if (params.noise_power == 0.0) return 0.0;

  double k_sum = 0.0;
  double worst = 0.0;
  for (int m : active) {
    const double k = sample_counts[static_cast<std::size_t>(m)];
    k_sum += k;
    const auto& st = stats[static_cast<std::size_t>(m)];
    if (st.degenerate()) continue;
    const double gain2 = std::norm(f.f.dot(effective_channel(ch, m, theta.theta)));
    worst = std::max(worst, k * k * st.variance / gain2);
  }
  return static_cast<double>(dim) * params.noise_power * worst /
         (params.max_power * k_sum * k_sum);
}

}  // namespace airfl
