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

#include "airfl/sca.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace airfl {

namespace {

// Euclidean projection onto the unit simplex (sorting method).
VecR project_simplex(VecR y) {
  const int n = static_cast<int>(y.size());
  std::vector<double> u(y.data(), y.data() + n);
  std::sort(u.begin(), u.end(), std::greater<double>());
  double cum = 0.0, lam = 0.0;
  for (int k = 0; k < n; ++k) {
    cum += u[static_cast<std::size_t>(k)];
    const double cand = (1.0 - cum) / (k + 1);
    if (u[static_cast<std::size_t>(k)] + cand > 0.0) lam = cand;
  }
  for (int i = 0; i < n; ++i) y(i) = std::max(y(i) + lam, 0.0);
  return y;
}

struct ScaledCoeffs {
  std::vector<VecC> a;   // a_m / K_m^2
  std::vector<VecC> b;   // b_m / K_m^2
  VecR c;                // c_m / K_m^2
};

ScaledCoeffs rescale(const SurrogateCoeffs& coeffs, const std::vector<double>& sample_counts) {
  ScaledCoeffs sc;
  const int n = static_cast<int>(coeffs.active.size());
  sc.a.resize(static_cast<std::size_t>(n));
  sc.b.resize(static_cast<std::size_t>(n));
  sc.c.resize(n);
  for (int i = 0; i < n; ++i) {
    const double k = sample_counts.at(static_cast<std::size_t>(coeffs.active[static_cast<std::size_t>(i)]));
    if (k <= 0) throw std::invalid_argument("active devices must hold a positive sample count");
    const double k2 = k * k;
    sc.a[static_cast<std::size_t>(i)] = coeffs.a[static_cast<std::size_t>(i)] / k2;
    sc.b[static_cast<std::size_t>(i)] = coeffs.b[static_cast<std::size_t>(i)] / k2;
    sc.c(i) = coeffs.c[static_cast<std::size_t>(i)] / k2;
  }
  return sc;
}

// Dual value in the simplex variables xi_m = K_m^2 zeta_m.
double scaled_dual_value(const VecR& xi, const ScaledCoeffs& sc) {
  const int n = static_cast<int>(xi.size());
  VecC u = VecC::Zero(sc.a.empty() ? 0 : sc.a[0].size());
  VecC v = VecC::Zero(sc.b.empty() ? 0 : sc.b[0].size());
  double lin = 0.0;
  for (int i = 0; i < n; ++i) {
    u += xi(i) * sc.a[static_cast<std::size_t>(i)];
    v += xi(i) * sc.b[static_cast<std::size_t>(i)];
    lin += xi(i) * sc.c(i);
  }
  return lin - 2.0 * u.norm() - 2.0 * v.lpNorm<1>();
}

VecR scaled_dual_supergradient(const VecR& xi, const ScaledCoeffs& sc) {
  const int n = static_cast<int>(xi.size());
  VecC u = VecC::Zero(sc.a.empty() ? 0 : sc.a[0].size());
  VecC v = VecC::Zero(sc.b.empty() ? 0 : sc.b[0].size());
  for (int i = 0; i < n; ++i) {
    u += xi(i) * sc.a[static_cast<std::size_t>(i)];
    v += xi(i) * sc.b[static_cast<std::size_t>(i)];
  }
  const double un = u.norm();
  VecC v_sign(v.size());
  for (int l = 0; l < v.size(); ++l) {
    const double av = std::abs(v(l));
    v_sign(l) = (av > 0.0) ? v(l) / av : Complex(0.0, 0.0);
  }
  VecR g(n);
  for (int i = 0; i < n; ++i) {
    double du = 0.0;
    if (un > 0.0) du = (u.dot(sc.a[static_cast<std::size_t>(i)])).real() / un;
    double dv = 0.0;
    for (int l = 0; l < v.size(); ++l)
      dv += (std::conj(v_sign(l)) * sc.b[static_cast<std::size_t>(i)](l)).real();
    g(i) = sc.c(i) - 2.0 * du - 2.0 * dv;
  }
  return g;
}

// Derivative-free refinement: shift probability mass between coordinate
// pairs with a shrinking step, staying exactly on the simplex.
void polish_on_simplex(VecR& xi, double& best_val, const ScaledCoeffs& sc) {
  const int n = static_cast<int>(xi.size());
  if (n < 2) return;
  double r = 0.25;
  while (r > 1e-11) {
    bool improved = false;
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < n; ++i) {
        if (i == j) continue;
        if (xi(j) <= 0.0) break;  // accepted moves may drain coordinate j
        const double delta = std::min(r, xi(j));
        VecR cand = xi;
        cand(j) -= delta;
        cand(i) += delta;
        const double val = scaled_dual_value(cand, sc);
        if (val > best_val) {
          best_val = val;
          xi = cand;
          improved = true;
        }
      }
    }
    if (!improved) r *= 0.5;
  }
}

}  // namespace

SurrogateCoeffs surrogate_coeffs(const Beamformer& f, const RisPhase& theta,
                                 const SelectionMask& mask, const ChannelRealization& ch,
                                 double tau) {
  if (tau <= 0.0) throw std::invalid_argument("tau must be positive");
  if (mask.size() != ch.num_devices())
    throw std::invalid_argument("selection mask length does not match device count");
  check_beamformer(f, ch.num_antennas());
  check_phases(theta, ch.num_ris_elements());

  SurrogateCoeffs coeffs;
  coeffs.tau = tau;
  coeffs.active = mask.active_indices();
  if (coeffs.active.empty()) throw std::invalid_argument("selection mask is empty");

  const int l = ch.num_ris_elements();
  for (int m : coeffs.active) {
    const VecC h = effective_channel(ch, m, theta.theta);
    const Complex fh = f.f.dot(h);  // f^H h_m
    VecC gf(l);
    if (l > 0) gf = ch.cascades[static_cast<std::size_t>(m)].adjoint() * f.f;
    coeffs.a.push_back(tau * f.f + h * std::conj(fh));
    VecC b = tau * theta.theta;
    if (l > 0) b += gf * fh;
    coeffs.b.push_back(std::move(b));
    const Complex cross = (l > 0) ? fh * theta.theta.dot(gf) : Complex(0.0, 0.0);
    coeffs.c.push_back(std::norm(fh) + 2.0 * tau * (l + 1) + 2.0 * cross.real());
  }
  return coeffs;
}

double dual_objective(const VecR& zeta, const SurrogateCoeffs& coeffs) {
  const int n = static_cast<int>(coeffs.active.size());
  if (zeta.size() != n)
    throw std::invalid_argument("one dual weight per active device is required");
  VecC u = VecC::Zero(coeffs.a.empty() ? 0 : coeffs.a[0].size());
  VecC v = VecC::Zero(coeffs.b.empty() ? 0 : coeffs.b[0].size());
  double lin = 0.0;
  for (int i = 0; i < n; ++i) {
    u += zeta(i) * coeffs.a[static_cast<std::size_t>(i)];
    v += zeta(i) * coeffs.b[static_cast<std::size_t>(i)];
    lin += zeta(i) * coeffs.c[static_cast<std::size_t>(i)];
  }
  return lin - 2.0 * u.norm() - 2.0 * v.lpNorm<1>();
}

DualWeights solve_dual(const SurrogateCoeffs& coeffs, const std::vector<double>& sample_counts,
                       const DualSolverConfig& config) {
  const int n = static_cast<int>(coeffs.active.size());
  if (n == 0) throw std::invalid_argument("no active devices");
  const ScaledCoeffs sc = rescale(coeffs, sample_counts);

  VecR xi = VecR::Constant(n, 1.0 / n);
  VecR xi_best = xi;
  double best = scaled_dual_value(xi, sc);

  int stalled = 0;
  int it = 1;
  for (; it <= config.max_iters; ++it) {
    VecR g = scaled_dual_supergradient(xi, sc);
    const double gn = g.norm();
    if (gn == 0.0) break;
    const double step = config.step_scale / std::sqrt(static_cast<double>(it));
    xi = project_simplex(xi + (step / gn) * g);
    const double val = scaled_dual_value(xi, sc);
    if (val > best + config.tol * (1.0 + std::abs(best))) {
      best = val;
      xi_best = xi;
      stalled = 0;
    } else {
      if (val > best) {
        best = val;
        xi_best = xi;
      }
      if (++stalled >= config.patience) break;
    }
  }
  if (config.polish) polish_on_simplex(xi_best, best, sc);

  DualWeights out;
  out.zeta.resize(n);
  for (int i = 0; i < n; ++i) {
    const double k = sample_counts[static_cast<std::size_t>(coeffs.active[static_cast<std::size_t>(i)])];
    out.zeta(i) = xi_best(i) / (k * k);
  }
  out.value = best;
  out.iters = it;
  return out;
}

std::pair<Beamformer, RisPhase> primal_update(const VecR& zeta, const SurrogateCoeffs& coeffs,
                                              const Beamformer& fallback_f) {
  const int n = static_cast<int>(coeffs.active.size());
  if (zeta.size() != n)
    throw std::invalid_argument("one dual weight per active device is required");

  VecC u = VecC::Zero(coeffs.a.empty() ? 0 : coeffs.a[0].size());
  VecC v = VecC::Zero(coeffs.b.empty() ? 0 : coeffs.b[0].size());
  for (int i = 0; i < n; ++i) {
    u += zeta(i) * coeffs.a[static_cast<std::size_t>(i)];
    v += zeta(i) * coeffs.b[static_cast<std::size_t>(i)];
  }

  Beamformer f;
  const double un = u.norm();
  if (un > 1e-14)
    f.f = u / un;
  else
    f.f = fallback_f.f;

  RisPhase theta;
  theta.theta.resize(v.size());
  for (int l = 0; l < v.size(); ++l) {
    const double av = std::abs(v(l));
    theta.theta(l) = (av > 1e-300) ? v(l) / av : Complex(1.0, 0.0);
  }
  return {std::move(f), std::move(theta)};
}

double sca_objective(const SelectionMask& mask, const ChannelRealization& ch,
                     const std::vector<double>& sample_counts, const Beamformer& f,
                     const RisPhase& theta) {
  const auto active = mask.active_indices();
  if (active.empty()) throw std::invalid_argument("selection mask is empty");
  double worst = -std::numeric_limits<double>::infinity();
  for (int m : active) {
    const double k = sample_counts.at(static_cast<std::size_t>(m));
    const double gain2 = std::norm(f.f.dot(effective_channel(ch, m, theta.theta)));
    worst = std::max(worst, -gain2 / (k * k));
  }
  return worst;
}

std::pair<Beamformer, RisPhase> default_init(const SelectionMask& mask,
                                             const ChannelRealization& ch,
                                             const std::vector<double>& sample_counts) {
  const auto active = mask.active_indices();
  if (active.empty()) throw std::invalid_argument("selection mask is empty");

  RisPhase theta;
  theta.theta = VecC::Constant(ch.num_ris_elements(), Complex(1.0, 0.0));

  // Match the receive filter to the device that binds the objective under
  // a matched filter, i.e. the smallest count-weighted channel energy.
  int pick = active.front();
  double pick_val = std::numeric_limits<double>::infinity();
  for (int m : active) {
    const double k = sample_counts.at(static_cast<std::size_t>(m));
    const double val = effective_channel(ch, m, theta.theta).squaredNorm() / (k * k);
    if (val < pick_val) {
      pick_val = val;
      pick = m;
    }
  }
  const VecC h = effective_channel(ch, pick, theta.theta);
  const double hn = h.norm();
  if (hn <= 1e-300)
    throw DegenerateChannelError("device " + std::to_string(pick) +
                                 " has a numerically zero channel");
  Beamformer f;
  f.f = h / hn;
  return {std::move(f), std::move(theta)};
}

ScaState sca_optimize(const SelectionMask& mask, const ChannelRealization& ch,
                      const std::vector<double>& sample_counts, const ScaConfig& config,
                      std::optional<std::pair<Beamformer, RisPhase>> init) {
  if (config.max_iters < 0) throw std::invalid_argument("max_iters must be >= 0");
  if (config.epsilon < 0) throw std::invalid_argument("epsilon must be >= 0");

  auto [f, theta] = init ? std::move(*init) : default_init(mask, ch, sample_counts);
  check_beamformer(f, ch.num_antennas());
  check_phases(theta, ch.num_ris_elements());

  ScaState state;
  double obj_prev = sca_objective(mask, ch, sample_counts, f, theta);
  state.f = f;
  state.theta = theta;
  state.objective = obj_prev;
  state.best_objective = obj_prev;
  state.last_objective = obj_prev;

  for (int i = 1; i <= config.max_iters; ++i) {
    state.iters = i;
    const SurrogateCoeffs coeffs = surrogate_coeffs(f, theta, mask, ch, config.tau);
    const DualWeights dw = solve_dual(coeffs, sample_counts, config.dual);
    auto next = primal_update(dw.zeta, coeffs, f);
    f = std::move(next.first);
    theta = std::move(next.second);
    const double obj = sca_objective(mask, ch, sample_counts, f, theta);
    state.last_objective = obj;
    if (obj < state.best_objective || config.return_last) {
      state.f = f;
      state.theta = theta;
      state.objective = obj;
    }
    state.best_objective = std::min(state.best_objective, obj);
    if (std::abs(obj - obj_prev) <= config.epsilon * (std::abs(obj) + 1e-300)) {
      state.converged = true;
      break;
    }
    obj_prev = obj;
  }
  if (!config.return_last) state.objective = state.best_objective;
  return state;
}

RisPhase project_phases(const RisPhase& theta, int bits) {
  if (bits < 1) throw std::invalid_argument("phase resolution must be at least one bit");
  if (bits > 30) throw std::invalid_argument("phase resolution too large");
  const int levels = 1 << bits;
  const double two_pi = 2.0 * std::numbers::pi;

  RisPhase out;
  out.resolution_bits = bits;
  out.theta.resize(theta.theta.size());
  for (int l = 0; l < theta.theta.size(); ++l) {
    double ang = std::arg(theta.theta(l));
    if (ang < 0.0) ang += two_pi;
    const double x = ang * levels / two_pi;
    // Nearest grid index; exact midpoints resolve to the smaller index.
    long idx = static_cast<long>(std::ceil(x - 0.5));
    idx %= levels;
    if (idx < 0) idx += levels;
    const double snapped = two_pi * static_cast<double>(idx) / levels;
    out.theta(l) = std::polar(1.0, snapped);
  }
  return out;
}

}  // namespace airfl
