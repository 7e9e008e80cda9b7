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

#include "airfl/flsim.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <numeric>
#include <ostream>
#include <stdexcept>

namespace airfl {

namespace {

double softplus(double z) {  // log(1 + e^z) without overflow
  if (z > 30.0) return z + std::log1p(std::exp(-z));
  return std::log1p(std::exp(z));
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

void check_device(const FlTask& task, int m) {
  if (m < 0 || m >= task.num_devices()) throw std::out_of_range("device index out of range");
}

void check_w(const FlTask& task, const VecR& w) {
  if (w.size() != task.dim) throw std::invalid_argument("model dimension mismatch");
}

VecR logistic_gradient_block(const FlTask& task, int m, const VecR& w, double scale) {
  const MatR& x = task.x[static_cast<std::size_t>(m)];
  const VecR& y = task.y[static_cast<std::size_t>(m)];
  const VecR t = x * w;
  VecR coef(t.size());
  for (int k = 0; k < t.size(); ++k)
    coef(k) = -y(k) * sigmoid(-y(k) * t(k)) * scale;
  return x.transpose() * coef;
}

// Reference logistic optimum by damped Newton iterations.
VecR solve_logistic_optimum(const FlTask& task) {
  VecR w = VecR::Zero(task.dim);
  for (int it = 0; it < 200; ++it) {
    const VecR g = global_gradient(task, w);
    if (g.norm() <= 1e-12) break;
    MatR h = task.reg * MatR::Identity(task.dim, task.dim);
    for (int m = 0; m < task.num_devices(); ++m) {
      const MatR& x = task.x[static_cast<std::size_t>(m)];
      const VecR t = x * w;
      VecR d(t.size());
      for (int k = 0; k < t.size(); ++k) {
        const double s = sigmoid(t(k) * task.y[static_cast<std::size_t>(m)](k));
        d(k) = s * (1.0 - s) / task.total_samples;
      }
      h.noalias() += x.transpose() * d.asDiagonal() * x;
    }
    const VecR step = h.ldlt().solve(g);
    double stepsize = 1.0;
    const double f0 = global_loss(task, w);
    const double slope = g.dot(step);
    while (stepsize > 1e-8 &&
           global_loss(task, w - stepsize * step) > f0 - 0.25 * stepsize * slope)
      stepsize *= 0.5;
    w -= stepsize * step;
  }
  return w;
}

}  // namespace

FlTask make_task_from_data(TaskKind kind, std::vector<MatR> x, std::vector<VecR> y,
                           double reg) {
  if (x.empty() || x.size() != y.size())
    throw std::invalid_argument("per-device features and labels must align");
  if (!(reg > 0.0)) throw std::invalid_argument("regularizer weight must be positive");

  FlTask task;
  task.kind = kind;
  task.reg = reg;
  task.dim = static_cast<int>(x[0].cols());
  if (task.dim < 1) throw std::invalid_argument("dimension must be >= 1");

  for (std::size_t m = 0; m < x.size(); ++m) {
    if (x[m].cols() != task.dim) throw std::invalid_argument("inconsistent feature dimension");
    if (x[m].rows() != y[m].size() || x[m].rows() == 0)
      throw std::invalid_argument("every device needs matching nonempty samples");
    if (kind == TaskKind::kLogistic)
      for (int k = 0; k < y[m].size(); ++k)
        if (y[m](k) != 1.0 && y[m](k) != -1.0)
          throw std::invalid_argument("logistic labels must be +-1");
    task.sample_counts.push_back(static_cast<double>(x[m].rows()));
    task.total_samples += static_cast<double>(x[m].rows());
    task.row_norms2.push_back(x[m].rowwise().squaredNorm());
  }
  task.x = std::move(x);
  task.y = std::move(y);

  const int d = task.dim;
  task.lin = VecR::Zero(d);
  MatR second_moment = MatR::Zero(d, d);
  for (int m = 0; m < task.num_devices(); ++m) {
    const MatR& xm = task.x[static_cast<std::size_t>(m)];
    const VecR& ym = task.y[static_cast<std::size_t>(m)];
    const double km = task.sample_counts[static_cast<std::size_t>(m)];
    second_moment.noalias() += xm.transpose() * xm / task.total_samples;
    task.hess_m.push_back(xm.transpose() * xm / km + task.reg * MatR::Identity(d, d));
    task.lin_m.push_back(xm.transpose() * ym / km);
    if (task.kind == TaskKind::kRidge) {
      task.lin.noalias() += xm.transpose() * ym / task.total_samples;
      task.offset += 0.5 * ym.squaredNorm() / task.total_samples;
    }
  }
  task.hess = second_moment + task.reg * MatR::Identity(d, d);

  Eigen::SelfAdjointEigenSolver<MatR> eig(second_moment);
  if (eig.info() != Eigen::Success) throw std::runtime_error("eigen decomposition failed");
  if (task.kind == TaskKind::kRidge) {
    task.constants.mu = eig.eigenvalues().minCoeff() + task.reg;
    task.constants.omega = eig.eigenvalues().maxCoeff() + task.reg;
    task.w_star = task.hess.ldlt().solve(task.lin);
  } else {
    task.constants.mu = task.reg;
    task.constants.omega = task.reg + eig.eigenvalues().maxCoeff() / 4.0;
    task.w_star = solve_logistic_optimum(task);
  }
  task.constants.alpha1 = 0.0;
  task.constants.alpha2 = 2.0;
  task.f_star = global_loss(task, task.w_star);
  return task;
}

FlTask make_task(TaskKind kind, int dim, const std::vector<double>& per_device_counts,
                 RngStream& rng, double reg) {
  if (dim < 1) throw std::invalid_argument("dimension must be >= 1");
  if (per_device_counts.empty()) throw std::invalid_argument("at least one device is required");

  VecR w_true(dim);
  for (int i = 0; i < dim; ++i) w_true(i) = rng.normal() / std::sqrt(static_cast<double>(dim));

  std::vector<MatR> x;
  std::vector<VecR> y;
  for (double count : per_device_counts) {
    if (!(count >= 1.0) || count != std::floor(count))
      throw std::invalid_argument("sample counts must be positive integers");
    const int k = static_cast<int>(count);
    MatR xm(k, dim);
    for (int r = 0; r < k; ++r)
      for (int c = 0; c < dim; ++c) xm(r, c) = rng.normal();
    VecR ym(k);
    if (kind == TaskKind::kRidge) {
      for (int r = 0; r < k; ++r) ym(r) = xm.row(r).dot(w_true) + 0.5 * rng.normal();
    } else {
      for (int r = 0; r < k; ++r)
        ym(r) = (rng.uniform() < sigmoid(xm.row(r).dot(w_true))) ? 1.0 : -1.0;
    }
    x.push_back(std::move(xm));
    y.push_back(std::move(ym));
  }
  return make_task_from_data(kind, std::move(x), std::move(y), reg);
}

double global_loss(const FlTask& task, const VecR& w) {
  check_w(task, w);
  if (task.kind == TaskKind::kRidge)
    return 0.5 * w.dot(task.hess * w) - task.lin.dot(w) + task.offset;
  double acc = 0.5 * task.reg * w.squaredNorm();
  for (int m = 0; m < task.num_devices(); ++m) {
    const VecR t = task.x[static_cast<std::size_t>(m)] * w;
    for (int k = 0; k < t.size(); ++k)
      acc += softplus(-task.y[static_cast<std::size_t>(m)](k) * t(k)) / task.total_samples;
  }
  return acc;
}

VecR global_gradient(const FlTask& task, const VecR& w) {
  check_w(task, w);
  if (task.kind == TaskKind::kRidge) return task.hess * w - task.lin;
  VecR g = task.reg * w;
  for (int m = 0; m < task.num_devices(); ++m)
    g += logistic_gradient_block(task, m, w, 1.0 / task.total_samples);
  return g;
}

VecR local_gradient(const FlTask& task, int m, const VecR& w) {
  check_device(task, m);
  check_w(task, w);
  if (task.kind == TaskKind::kRidge)
    return task.hess_m[static_cast<std::size_t>(m)] * w - task.lin_m[static_cast<std::size_t>(m)];
  return task.reg * w + logistic_gradient_block(
                            task, m, w, 1.0 / task.sample_counts[static_cast<std::size_t>(m)]);
}

VecR per_sample_grad2(const FlTask& task, int m, const VecR& w) {
  check_device(task, m);
  check_w(task, w);
  const MatR& x = task.x[static_cast<std::size_t>(m)];
  const VecR& y = task.y[static_cast<std::size_t>(m)];
  const VecR t = x * w;
  const VecR& rn2 = task.row_norms2[static_cast<std::size_t>(m)];
  const double w2 = w.squaredNorm();
  VecR out(t.size());
  for (int k = 0; k < t.size(); ++k) {
    // per-sample gradient is c x_k + reg w, with c the scalar loss derivative
    const double c = (task.kind == TaskKind::kRidge) ? (t(k) - y(k))
                                                     : -y(k) * sigmoid(-y(k) * t(k));
    out(k) = c * c * rn2(k) + 2.0 * task.reg * c * t(k) + task.reg * task.reg * w2;
  }
  return out;
}

double max_per_sample_grad2(const FlTask& task, const VecR& w) {
  double worst = 0.0;
  for (int m = 0; m < task.num_devices(); ++m)
    worst = std::max(worst, per_sample_grad2(task, m, w).maxCoeff());
  return worst;
}

VecR local_minibatch_update(const FlTask& task, int m, const VecR& w, int batch_size,
                            double lambda, RngStream& rng) {
  check_device(task, m);
  check_w(task, w);
  if (batch_size < 1) throw std::invalid_argument("batch size must be >= 1");
  if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be positive");
  const int k_m = static_cast<int>(task.sample_counts[static_cast<std::size_t>(m)]);
  if (batch_size >= k_m) return local_gradient(task, m, w);

  std::vector<int> order(static_cast<std::size_t>(k_m));
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng.engine());

  const MatR& x = task.x[static_cast<std::size_t>(m)];
  const VecR& y = task.y[static_cast<std::size_t>(m)];
  VecR w_cur = w;
  for (int start = 0; start < k_m; start += batch_size) {
    const int len = std::min(batch_size, k_m - start);
    VecR g = task.reg * w_cur;
    for (int i = 0; i < len; ++i) {
      const int k = order[static_cast<std::size_t>(start + i)];
      const double t = x.row(k).dot(w_cur);
      const double c = (task.kind == TaskKind::kRidge) ? (t - y(k))
                                                       : -y(k) * sigmoid(-y(k) * t);
      g += (c / len) * x.row(k).transpose();
    }
    w_cur -= lambda * g;
  }
  return (w - w_cur) / lambda;
}

VecR global_update(const VecR& w, const VecR& r_hat, double active_sum, double lambda) {
  if (!(active_sum > 0.0)) throw std::invalid_argument("active sample sum must be positive");
  if (w.size() != r_hat.size()) throw std::invalid_argument("dimension mismatch");
  return w - (lambda / active_sum) * r_hat;
}

std::pair<VecR, VecR> error_decomposition(const VecR& grad_f, const VecR& r,
                                          const VecR& r_hat, double active_sum) {
  if (!(active_sum > 0.0)) throw std::invalid_argument("active sample sum must be positive");
  if (grad_f.size() != r.size() || r.size() != r_hat.size())
    throw std::invalid_argument("dimension mismatch");
  return {grad_f - r / active_sum, (r - r_hat) / active_sum};
}

namespace {

// Channel, selection, and transceiver front end in force for a span of
// rounds. For the no-surface baselines the surface contribution is folded
// into (or absent from) a reduced direct-only realization.
struct RoundPolicy {
  ChannelRealization ch;
  SelectionMask mask;
  Beamformer f;
  RisPhase theta;
  double d = 0.0;
};

RoundPolicy build_policy(const PolicySource& source, const ChannelRealization& drawn,
                         const FlTask& task, const TrainContext& ctx, bool first_block,
                         RngStream& rng) {
  RoundPolicy rp;
  const int n = drawn.num_antennas();
  const int m_total = drawn.num_devices();

  switch (source.kind) {
    case PolicyKind::kErrorFree:
      throw std::logic_error("error-free source needs no policy");
    case PolicyKind::kOptimized: {
      GibbsResult res;
      if (first_block && source.solution)
        res = *source.solution;
      else
        res = gibbs_optimize(drawn, task.sample_counts, ctx.params, source.optimizer, rng);
      rp.ch = drawn;
      rp.mask = res.mask;
      rp.f = res.f;
      rp.theta = res.theta;
      rp.d = res.j_value;
      if (source.phase_bits > 0) {
        rp.theta = project_phases(rp.theta, source.phase_bits);
        rp.d = d_value(rp.mask, rp.f, rp.theta, rp.ch, task.sample_counts, ctx.params);
      }
      return rp;
    }
    case PolicyKind::kSelectAllNoRis: {
      rp.ch = make_realization(drawn.h_dp, MatC::Zero(n, 0), MatC::Zero(0, m_total));
      break;
    }
    case PolicyKind::kRandomPhases: {
      VecC theta_r(drawn.num_ris_elements());
      for (int l = 0; l < theta_r.size(); ++l)
        theta_r(l) = std::polar(1.0, rng.uniform(0.0, 2.0 * std::numbers::pi));
      MatC folded(n, m_total);
      for (int m = 0; m < m_total; ++m) folded.col(m) = effective_channel(drawn, m, theta_r);
      rp.ch = make_realization(std::move(folded), MatC::Zero(n, 0), MatC::Zero(0, m_total));
      break;
    }
  }

  // Shared tail of the two no-surface baselines: all devices stay selected
  // and only the receive beamformer is optimized.
  rp.mask = SelectionMask::all_active(m_total);
  const ScaState s = sca_optimize(rp.mask, rp.ch, task.sample_counts, source.beamformer_only);
  rp.f = s.f;
  rp.theta = s.theta;  // empty, L = 0
  rp.d = d_value(rp.mask, rp.f, rp.theta, rp.ch, task.sample_counts, ctx.params);
  return rp;
}

}  // namespace

void TrainingTrace::write_csv(std::ostream& os) const {
  os << "round,loss,gap,grad_norm2,e1_sq,e2_sq,selected,d_value\n";
  os << std::setprecision(17);
  for (int t = 0; t < loss.size(); ++t) {
    os << (t + 1) << ',' << loss(t) << ',' << gap(t) << ',' << grad_norm2(t) << ','
       << e1_sq(t) << ',' << e2_sq(t) << ',' << selected[static_cast<std::size_t>(t)] << ','
       << d_value(t) << '\n';
  }
}

TrainingTrace run_training(const FlTask& task, const PolicySource& source,
                           const TrainContext& ctx, const TrainConfig& cfg, RngStream& rng,
                           std::optional<ChannelRealization> initial) {
  if (cfg.rounds < 1) throw std::invalid_argument("at least one round is required");
  const double lambda =
      (cfg.learning_rate > 0.0) ? cfg.learning_rate : task.constants.learning_rate();
  if (!(lambda > 0.0)) throw std::invalid_argument("learning rate must be positive");

  VecR w;
  if (cfg.w0.size() == 0)
    w = VecR::Zero(task.dim);
  else {
    check_w(task, cfg.w0);
    w = cfg.w0;
  }

  const int t_total = cfg.rounds;
  TrainingTrace trace;
  trace.loss.resize(t_total);
  trace.gap.resize(t_total);
  trace.grad_norm2.resize(t_total);
  trace.e1_sq.resize(t_total);
  trace.e2_sq.resize(t_total);
  trace.selected.resize(static_cast<std::size_t>(t_total));
  trace.d_value.resize(t_total);
  if (cfg.collect_a4) {
    trace.max_sample_grad2.resize(t_total);
    trace.global_grad2_pre.resize(t_total);
  }

  const bool error_free = source.kind == PolicyKind::kErrorFree;
  RoundPolicy policy;
  if (!error_free) {
    ChannelRealization drawn =
        initial ? std::move(*initial) : draw_channels(ctx.geometry, ctx.params, ctx.model, rng);
    policy = build_policy(source, drawn, task, ctx, true, rng);
  }

  for (int t = 1; t <= t_total; ++t) {
    if (!error_free && ctx.schedule.block_period > 0 && t > 1 &&
        (t - 1) % ctx.schedule.block_period == 0) {
      ChannelRealization drawn = draw_channels(ctx.geometry, ctx.params, ctx.model, rng);
      policy = build_policy(source, drawn, task, ctx, false, rng);
    }

    const VecR grad_f = global_gradient(task, w);
    if (cfg.collect_a4) {
      trace.max_sample_grad2(t - 1) = max_per_sample_grad2(task, w);
      trace.global_grad2_pre(t - 1) = grad_f.squaredNorm();
    }

    if (error_free) {
      w -= lambda * grad_f;
      trace.e1_sq(t - 1) = 0.0;
      trace.e2_sq(t - 1) = 0.0;
      trace.selected[static_cast<std::size_t>(t - 1)] = task.num_devices();
      trace.d_value(t - 1) = 0.0;
    } else {
      const auto active = policy.mask.active_indices();
      double k_sel = 0.0;
      VecR r = VecR::Zero(task.dim);
      std::vector<GradientStats> stats(static_cast<std::size_t>(task.num_devices()));
      std::vector<VecR> symbols;
      symbols.reserve(active.size());
      for (int m : active) {
        const VecR g =
            (cfg.batch_size > 0)
                ? local_minibatch_update(task, m, w, cfg.batch_size, lambda, rng)
                : local_gradient(task, m, w);
        const double km = task.sample_counts[static_cast<std::size_t>(m)];
        k_sel += km;
        r += km * g;
        stats[static_cast<std::size_t>(m)] = gradient_stats(g);
        symbols.push_back(normalize_symbols(g, stats[static_cast<std::size_t>(m)]));
      }
      const TransceiverPolicy tp = optimal_policy(policy.mask, policy.f, policy.theta,
                                                  policy.ch, task.sample_counts, stats,
                                                  ctx.params);
      const AggregationResult agg =
          simulate_uplink(symbols, tp, policy.f, policy.theta, policy.ch, stats,
                          task.sample_counts, ctx.params, task.dim, rng);
      trace.e1_sq(t - 1) = (grad_f - r / k_sel).squaredNorm();
      trace.e2_sq(t - 1) = agg.e2_sample;
      trace.selected[static_cast<std::size_t>(t - 1)] = static_cast<int>(active.size());
      trace.d_value(t - 1) = policy.d;
      w = global_update(w, agg.r_hat, k_sel, lambda);
    }

    trace.loss(t - 1) = global_loss(task, w);
    trace.gap(t - 1) = trace.loss(t - 1) - task.f_star;
    trace.grad_norm2(t - 1) = global_gradient(task, w).squaredNorm();
  }
  trace.w_final = w;
  return trace;
}

}  // namespace airfl
