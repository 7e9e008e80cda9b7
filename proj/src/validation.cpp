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

#include "airfl/validation.hpp"

#include "airfl/aggregation.hpp"
#include "airfl/channel.hpp"
#include "airfl/flsim.hpp"
#include "airfl/objective.hpp"
#include "airfl/sca.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

namespace airfl {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double elapsed_since(const std::chrono::steady_clock::time_point& start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

VecC random_unit_beamformer(int n, RngStream& rng) {
  VecC f = rng.cnormal_vector(n);
  return f / f.norm();
}

VecC random_phases(int l, RngStream& rng) {
  VecC theta(l);
  for (int i = 0; i < l; ++i)
    theta(i) = std::polar(1.0, rng.uniform(0.0, 2.0 * std::numbers::pi));
  return theta;
}

// A random uplink round: channels, selection, per-device update vectors and
// a feasible transceiver front end, at unit channel scale.
struct RoundInstance {
  SystemParams params;
  ChannelRealization ch;
  std::vector<double> counts;
  std::vector<GradientStats> stats;
  std::vector<VecR> symbols;  // active devices, ascending
  std::vector<VecR> raw;      // matching raw update vectors
  SelectionMask mask;
  Beamformer f;
  RisPhase theta;
};

RoundInstance random_round(RngStream& rng, int max_m, int max_n, int max_l, int dim,
                           double noise_power) {
  RoundInstance ins;
  const int m_total = 1 + rng.uniform_int(0, max_m - 1);
  const int n = 1 + rng.uniform_int(0, max_n - 1);
  const int l = rng.uniform_int(0, max_l);

  ins.params.num_antennas = n;
  ins.params.num_ris_elements = l;
  ins.params.num_devices = m_total;
  ins.params.max_power = 0.1;
  ins.params.noise_power = noise_power;

  ins.ch = make_realization(rng.cnormal_matrix(n, m_total), rng.cnormal_matrix(n, l),
                            rng.cnormal_matrix(l, m_total));

  ins.mask = SelectionMask(m_total);
  for (int m = 0; m < m_total; ++m) ins.mask.set(m, rng.uniform() < 0.75);
  if (ins.mask.count() == 0) ins.mask.set(0, true);

  ins.stats.resize(static_cast<std::size_t>(m_total));
  for (int m = 0; m < m_total; ++m) {
    ins.counts.push_back(static_cast<double>(1 + rng.uniform_int(0, 4)));
    if (!ins.mask.active(m)) continue;
    const double scale = std::pow(10.0, rng.uniform(-1.0, 0.5));
    VecR g(dim);
    for (int d = 0; d < dim; ++d) g(d) = scale * rng.normal();
    g.array() += scale * rng.normal();
    ins.stats[static_cast<std::size_t>(m)] = gradient_stats(g);
    ins.symbols.push_back(normalize_symbols(g, ins.stats[static_cast<std::size_t>(m)]));
    ins.raw.push_back(std::move(g));
  }

  ins.f.f = random_unit_beamformer(n, rng);
  ins.theta.theta = random_phases(l, rng);
  return ins;
}

}  // namespace

PolicyCheckReport validate_policy(const PolicyCheckOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  PolicyCheckReport rep;
  rep.instances = options.instances;

  for (int i = 0; i < options.instances; ++i) {
    RngStream rng(options.seed, 100 + static_cast<std::uint64_t>(i));
    RoundInstance ins = random_round(rng, 8, 4, 16, options.dim, 0.01);
    const TransceiverPolicy tp =
        optimal_policy(ins.mask, ins.f, ins.theta, ins.ch, ins.counts, ins.stats, ins.params);

    const double budget = ins.params.max_power;
    double max_p2 = 0.0;
    double k_sum = 0.0;
    for (std::size_t idx = 0; idx < tp.active.size(); ++idx) {
      const int m = tp.active[idx];
      k_sum += ins.counts[static_cast<std::size_t>(m)];
      const GradientStats& st = ins.stats[static_cast<std::size_t>(m)];
      const double p2 = std::norm(tp.p[idx]);
      max_p2 = std::max(max_p2, p2);
      rep.worst_power_excess = std::max(rep.worst_power_excess, p2 - budget);
      if (st.degenerate()) continue;
      const VecC h = effective_channel(ins.ch, m, ins.theta.theta);
      const Complex gain = ins.f.f.dot(h);
      const Complex aligned =
          gain * tp.p[idx] / (std::sqrt(tp.eta) * std::sqrt(st.variance));
      rep.worst_alignment = std::max(
          rep.worst_alignment,
          std::abs(Complex(ins.counts[static_cast<std::size_t>(m)], 0.0) - aligned));
    }
    rep.worst_binding_gap = std::max(rep.worst_binding_gap, (budget - max_p2) / budget);

    const double closed = aggregation_mse(ins.mask, ins.f, ins.theta, ins.ch, ins.counts,
                                          ins.stats, ins.params, options.dim);
    if (!(closed > 0.0)) continue;

    // Scaling-grid search with channel inversion enforced: any feasible
    // scaling eta yields error energy dim * noise * ||f||^2 / (eta K^2).
    double best_grid = kInf;
    const double f2 = ins.f.f.squaredNorm();
    for (int k = 1; k <= options.grid_points; ++k) {
      const double eta =
          2.0 * tp.eta * static_cast<double>(k) / static_cast<double>(options.grid_points);
      bool feasible = true;
      for (std::size_t idx = 0; idx < tp.active.size() && feasible; ++idx) {
        const int m = tp.active[idx];
        const GradientStats& st = ins.stats[static_cast<std::size_t>(m)];
        if (st.degenerate()) continue;
        const VecC h = effective_channel(ins.ch, m, ins.theta.theta);
        const double g2 = std::norm(ins.f.f.dot(h));
        const double km = ins.counts[static_cast<std::size_t>(m)];
        feasible = eta * km * km * st.variance / g2 <= budget * (1.0 + 1e-12);
      }
      if (!feasible) continue;
      best_grid = std::min(best_grid,
                           options.dim * ins.params.noise_power * f2 / (eta * k_sum * k_sum));
    }
    rep.worst_grid_excess = std::max(rep.worst_grid_excess, (closed - best_grid) / closed);

    double acc = 0.0;
    for (int r = 0; r < options.mc_runs; ++r) {
      acc += simulate_uplink(ins.symbols, tp, ins.f, ins.theta, ins.ch, ins.stats,
                             ins.counts, ins.params, options.dim, rng)
                 .e2_sample;
    }
    const double mc = acc / static_cast<double>(options.mc_runs);
    rep.worst_mc_rel = std::max(rep.worst_mc_rel, std::abs(mc - closed) / closed);
  }

  rep.grid_ok = rep.worst_grid_excess <= 0.005;
  rep.mc_ok = rep.worst_mc_rel <= 0.02;
  rep.alignment_ok = rep.worst_alignment <= 1e-10;
  rep.power_ok = rep.worst_power_excess <= 1e-9 && rep.worst_binding_gap <= 1e-6;
  rep.pass = rep.grid_ok && rep.mc_ok && rep.alignment_ok && rep.power_ok;
  rep.seconds = elapsed_since(start);
  return rep;
}

NoiselessCheckReport validate_noiseless(const NoiselessCheckOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  NoiselessCheckReport rep;
  rep.instances = options.instances;

  for (int i = 0; i < options.instances; ++i) {
    RngStream rng(options.seed, 500 + static_cast<std::uint64_t>(i));
    RoundInstance ins = random_round(rng, 8, 4, 16, options.dim, 0.0);
    const TransceiverPolicy tp =
        optimal_policy(ins.mask, ins.f, ins.theta, ins.ch, ins.counts, ins.stats, ins.params);
    const AggregationResult agg =
        simulate_uplink(ins.symbols, tp, ins.f, ins.theta, ins.ch, ins.stats, ins.counts,
                        ins.params, options.dim, rng);

    VecR ideal = VecR::Zero(options.dim);
    const auto active = ins.mask.active_indices();
    for (std::size_t idx = 0; idx < active.size(); ++idx)
      ideal += ins.counts[static_cast<std::size_t>(active[idx])] * ins.raw[idx];

    const double scale = std::max(ideal.norm(), 1e-300);
    rep.worst_rel = std::max(rep.worst_rel, (agg.r_hat - ideal).norm() / scale);
  }

  rep.pass = rep.worst_rel <= 1e-9;
  rep.seconds = elapsed_since(start);
  return rep;
}

SamplerCheckReport validate_sampler(const SamplerCheckOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  SamplerCheckReport rep;
  RngStream rng(options.seed, 900);

  VecR j2(2);
  j2 << 1.0, 2.0;
  const VecR p2 = gibbs_probabilities(j2, 1.0);
  rep.two_point_exact_err = std::max(std::abs(p2(0) - 0.7310585786300049),
                                     std::abs(p2(1) - 0.2689414213699951));

  VecR freq2 = VecR::Zero(2);
  for (int r = 0; r < options.draws; ++r) freq2(sample_selection(j2, 1.0, rng)) += 1.0;
  freq2 /= static_cast<double>(options.draws);
  rep.two_point_freq_dev = (freq2 - p2).cwiseAbs().maxCoeff();

  VecR j5(5);
  j5 << 3.2, 1.1, kInf, 2.5, 1.9;
  const VecR p5 = gibbs_probabilities(j5, 0.7);
  VecR freq5 = VecR::Zero(5);
  for (int r = 0; r < options.draws; ++r) freq5(sample_selection(j5, 0.7, rng)) += 1.0;
  freq5 /= static_cast<double>(options.draws);
  rep.multi_freq_dev = (freq5 - p5).cwiseAbs().maxCoeff();
  rep.infeasible_prob = std::max(p5(2), freq5(2));

  // Temperature trace of a tiny but real annealing run.
  SystemParams params;
  params.num_antennas = 1;
  params.num_ris_elements = 0;
  params.num_devices = 2;
  params.noise_power = 1e-4;
  MatC h_dp(1, 2);
  h_dp << Complex(1.0, 0.0), Complex(0.7, 0.2);
  const ChannelRealization ch = make_realization(h_dp, MatC::Zero(1, 0), MatC::Zero(0, 2));
  GibbsConfig gc;
  gc.j_max = 50;
  gc.inner.max_iters = 5;
  gc.inner.epsilon = 1e-3;
  gc.inner.dual.max_iters = 200;
  gc.inner.dual.patience = 50;
  RngStream chain_rng(options.seed, 901);
  const GibbsResult res = gibbs_optimize(ch, {1.0, 1.0}, params, gc, chain_rng);
  for (const GibbsLogRow& row : res.log) {
    const double expected = gc.beta0 * std::pow(gc.rho, row.iter);
    rep.worst_beta_rel =
        std::max(rep.worst_beta_rel, std::abs(row.beta - expected) / expected);
  }

  rep.pass = rep.two_point_exact_err <= 1e-12 && rep.two_point_freq_dev <= 0.01 &&
             rep.multi_freq_dev <= 0.01 && rep.infeasible_prob == 0.0 &&
             rep.worst_beta_rel <= 1e-12 &&
             static_cast<int>(res.log.size()) == gc.j_max;
  rep.seconds = elapsed_since(start);
  return rep;
}

SolverCheckReport validate_solver(const SolverCheckOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  SolverCheckReport rep;
  rep.instances = options.instances;
  rep.worst_excess = -kInf;

  ScaConfig strong;
  strong.tau = 1.0;
  strong.max_iters = 100;
  strong.epsilon = 1e-10;
  strong.dual.max_iters = 2500;
  strong.dual.tol = 1e-14;
  strong.dual.patience = 400;
  strong.dual.polish = true;

  for (int i = 0; i < options.instances; ++i) {
    RngStream rng(options.seed, 300 + static_cast<std::uint64_t>(i));
    const int m_total = 4, n = 3, l = 8;
    const ChannelRealization ch =
        make_realization(rng.cnormal_matrix(n, m_total), rng.cnormal_matrix(n, l),
                         rng.cnormal_matrix(l, m_total));
    std::vector<double> counts;
    for (int m = 0; m < m_total; ++m)
      counts.push_back(static_cast<double>(1 + rng.uniform_int(0, 2)));
    const SelectionMask mask = SelectionMask::all_active(m_total);

    const ScaState state = sca_optimize(mask, ch, counts, strong);
    rep.worst_feasibility =
        std::max(rep.worst_feasibility, std::abs(state.f.f.norm() - 1.0));
    for (int q = 0; q < state.theta.theta.size(); ++q)
      rep.worst_feasibility =
          std::max(rep.worst_feasibility, std::abs(std::abs(state.theta.theta(q)) - 1.0));

    // Short manual run exposing every iterate for feasibility and the
    // linearization identities.
    auto [f, theta] = default_init(mask, ch, counts);
    for (int it = 0; it < 8; ++it) {
      const SurrogateCoeffs coeffs = surrogate_coeffs(f, theta, mask, ch, strong.tau);
      for (std::size_t a = 0; a < coeffs.active.size(); ++a) {
        const int m = coeffs.active[a];
        const VecC h = effective_channel(ch, m, theta.theta);
        const double g2 = std::norm(f.f.dot(h));
        double lin = 2.0 * (f.f.dot(coeffs.a[a])).real();
        if (theta.theta.size() > 0) lin += 2.0 * (theta.theta.dot(coeffs.b[a])).real();
        rep.worst_tangency =
            std::max(rep.worst_tangency, std::abs(coeffs.c[a] - lin + g2));
      }
      const DualWeights dw = solve_dual(coeffs, counts, strong.dual);
      auto [f_next, theta_next] = primal_update(dw.zeta, coeffs, f);

      VecC u = VecC::Zero(n);
      VecC v = VecC::Zero(l);
      for (std::size_t a = 0; a < coeffs.active.size(); ++a) {
        u += dw.zeta(static_cast<int>(a)) * coeffs.a[a];
        v += dw.zeta(static_cast<int>(a)) * coeffs.b[a];
      }
      rep.worst_attainment = std::max(
          rep.worst_attainment, std::abs((f_next.f.dot(u)).real() - u.norm()));
      double v_inner = 0.0;
      for (int q = 0; q < l; ++q)
        v_inner += (std::conj(theta_next.theta(q)) * v(q)).real();
      rep.worst_attainment =
          std::max(rep.worst_attainment, std::abs(v_inner - v.lpNorm<1>()));

      rep.worst_feasibility =
          std::max(rep.worst_feasibility, std::abs(f_next.f.norm() - 1.0));
      for (int q = 0; q < l; ++q)
        rep.worst_feasibility = std::max(rep.worst_feasibility,
                                         std::abs(std::abs(theta_next.theta(q)) - 1.0));
      f = f_next;
      theta = theta_next;
    }

    double best_random = kInf;
    for (int s = 0; s < options.random_samples; ++s) {
      Beamformer fr{random_unit_beamformer(n, rng)};
      RisPhase tr{random_phases(l, rng), 0};
      best_random = std::min(best_random, sca_objective(mask, ch, counts, fr, tr));
    }
    rep.worst_excess = std::max(rep.worst_excess, state.best_objective - best_random);
  }

  // Dual accuracy against a dense simplex grid on three-device instances.
  for (int i = 0; i < options.dual_instances; ++i) {
    RngStream rng(options.seed, 400 + static_cast<std::uint64_t>(i));
    const int m_total = 3, n = 3, l = 8;
    const ChannelRealization ch =
        make_realization(rng.cnormal_matrix(n, m_total), rng.cnormal_matrix(n, l),
                         rng.cnormal_matrix(l, m_total));
    std::vector<double> counts;
    for (int m = 0; m < m_total; ++m)
      counts.push_back(static_cast<double>(1 + rng.uniform_int(0, 2)));
    const SelectionMask mask = SelectionMask::all_active(m_total);

    Beamformer f0{random_unit_beamformer(n, rng)};
    RisPhase t0{random_phases(l, rng), 0};
    const SurrogateCoeffs coeffs = surrogate_coeffs(f0, t0, mask, ch, strong.tau);
    const DualWeights dw = solve_dual(coeffs, counts, strong.dual);

    const int res = options.grid_resolution;
    double best_grid = -kInf;
    VecR zeta(3);
    for (int i1 = 0; i1 <= res; ++i1) {
      for (int i2 = 0; i2 <= res - i1; ++i2) {
        const double x1 = static_cast<double>(i1) / res;
        const double x2 = static_cast<double>(i2) / res;
        const double x3 = 1.0 - x1 - x2;
        zeta(0) = x1 / (counts[0] * counts[0]);
        zeta(1) = x2 / (counts[1] * counts[1]);
        zeta(2) = x3 / (counts[2] * counts[2]);
        best_grid = std::max(best_grid, dual_objective(zeta, coeffs));
      }
    }
    rep.worst_dual_rel =
        std::max(rep.worst_dual_rel,
                 std::abs(dw.value - best_grid) / std::max(std::abs(best_grid), 1e-300));
  }

  rep.excess_ok = rep.worst_excess <= 1e-6;
  rep.feasibility_ok = rep.worst_feasibility <= 1e-12;
  rep.dual_ok = rep.worst_dual_rel <= 1e-4;
  rep.identities_ok = rep.worst_tangency <= 1e-9 && rep.worst_attainment <= 1e-9;
  rep.pass = rep.excess_ok && rep.feasibility_ok && rep.dual_ok && rep.identities_ok;
  rep.seconds = elapsed_since(start);
  return rep;
}

BoundCheckReport validate_bound(const BoundCheckOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  BoundCheckReport rep;

  SystemParams params;
  params.num_antennas = options.antennas;
  params.num_ris_elements = options.ris_elements;
  params.num_devices = options.devices;
  params.noise_power = options.noise_power;

  RngStream geo_rng(options.seed, 1);
  Geometry geometry = place_devices(PlacementSetting::kTwoCluster, params, geo_rng);

  // Unequal sample counts, roughly 10:1 between a random half of the
  // devices and the rest, rescaled so they sum to the requested total.
  RngStream count_rng(options.seed, 2);
  const int m_total = options.devices;
  const int half = m_total / 2;
  const double per = static_cast<double>(options.total_samples) / m_total;
  std::vector<double> counts(static_cast<std::size_t>(m_total));
  std::vector<int> order(static_cast<std::size_t>(m_total));
  for (int m = 0; m < m_total; ++m) order[static_cast<std::size_t>(m)] = m;
  std::shuffle(order.begin(), order.end(), count_rng.engine());
  double running = 0.0;
  for (int r = 0; r < m_total; ++r) {
    const bool high = r < half;
    const int lo = static_cast<int>(per * (high ? 1.5 : 0.15));
    const int hi = static_cast<int>(per * (high ? 1.9 : 0.30));
    const double k = static_cast<double>(count_rng.uniform_int(lo, hi));
    counts[static_cast<std::size_t>(order[static_cast<std::size_t>(r)])] = k;
    running += k;
  }
  // absorb the rounding slack into the first high-count device
  counts[static_cast<std::size_t>(order[0])] += options.total_samples - running;
  for (double k : counts)
    if (!(k >= 1.0)) throw std::logic_error("count rescaling produced a nonpositive count");

  RngStream task_rng(options.seed, 3);
  FlTask task = make_task(TaskKind::kRidge, options.dim, counts, task_rng, 0.1);

  SmallScaleModel model;
  RngStream chan_rng(options.seed, 4);
  ChannelRealization ch = draw_channels(geometry, params, model, chan_rng);

  RngStream opt_rng(options.seed, 5);
  const GibbsResult sol =
      gibbs_optimize(ch, task.sample_counts, params, options.optimizer, opt_rng);
  rep.d = sol.j_value;

  TrainContext ctx;
  ctx.params = params;
  ctx.geometry = geometry;
  ctx.model = model;

  PolicySource src;
  src.kind = PolicyKind::kOptimized;
  src.solution = sol;
  src.optimizer = options.optimizer;

  TrainConfig tc;
  tc.rounds = options.rounds;
  tc.collect_a4 = true;

  MatR gaps(options.trajectories, options.rounds);
  double alpha1 = 0.0;
  RngStream base(options.seed, 6);
  for (int i = 0; i < options.trajectories; ++i) {
    RngStream rng = base.split(static_cast<std::uint64_t>(i));
    const TrainingTrace trace = run_training(task, src, ctx, tc, rng, ch);
    gaps.row(i) = trace.gap.transpose();
    alpha1 = std::max(
        alpha1, estimate_alpha1(trace.max_sample_grad2, trace.global_grad2_pre, 2.0));
  }

  ConvexityConstants c = task.constants;
  c.alpha1 = alpha1;
  c.alpha2 = 2.0;
  rep.mu = c.mu;
  rep.omega = c.omega;
  rep.alpha1 = alpha1;
  rep.alpha2 = c.alpha2;
  rep.initial_gap = global_loss(task, VecR::Zero(task.dim)) - task.f_star;
  rep.psi = contraction_factor(rep.d, c);

  rep.mean_gap = gaps.colwise().mean().transpose();
  rep.bound.resize(options.rounds);
  rep.max_violation = -kInf;
  rep.max_violation_rel = -kInf;
  for (int t = 1; t <= options.rounds; ++t) {
    rep.bound(t - 1) = loss_bound(t, rep.d, c, rep.initial_gap);
    const double violation = rep.mean_gap(t - 1) - rep.bound(t - 1);
    rep.max_violation = std::max(rep.max_violation, violation);
    rep.max_violation_rel = std::max(
        rep.max_violation_rel, violation / std::max(rep.bound(t - 1), 1e-300));
  }
  rep.dominance_ok = rep.max_violation <= 0.0;

  rep.d_in_range = c.alpha2 > 0.0 && rep.d <= 1.0 / (2.0 * c.alpha2);
  const auto asym = asymptotic_gap(rep.d, c);
  if (rep.d_in_range && asym) {
    rep.asymptote = *asym;
    const int lo = options.tail_start - 1;
    const int len = options.tail_end - options.tail_start + 1;
    VecR tails(options.trajectories);
    for (int i = 0; i < options.trajectories; ++i)
      tails(i) = gaps.row(i).segment(lo, len).mean();
    rep.tail_mean = tails.mean();
    const double var =
        (tails.array() - rep.tail_mean).square().sum() /
        std::max(1, options.trajectories - 1);
    rep.tail_se = std::sqrt(var / options.trajectories);
    rep.tail_ok = rep.tail_mean <= rep.asymptote + 3.0 * rep.tail_se;
  }

  rep.pass = rep.dominance_ok && rep.d_in_range && rep.tail_ok;
  rep.seconds = elapsed_since(start);
  return rep;
}

}  // namespace airfl
