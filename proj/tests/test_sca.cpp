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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "airfl/sca.hpp"

#include <numbers>

using namespace airfl;

namespace {

struct Instance {
  ChannelRealization ch;
  SelectionMask mask;
  std::vector<double> counts;
};

Instance random_instance(int n, int l, int m, RngStream& rng) {
  Instance ins;
  ins.ch = make_realization(rng.cnormal_matrix(n, m), rng.cnormal_matrix(n, l),
                            rng.cnormal_matrix(l, m));
  ins.mask = SelectionMask::all_active(m);
  for (int i = 0; i < m; ++i) ins.counts.push_back(double(rng.uniform_int(1, 3)));
  return ins;
}

std::pair<Beamformer, RisPhase> random_point(int n, int l, RngStream& rng) {
  Beamformer f;
  VecC v = rng.cnormal_vector(n);
  f.f = v / v.norm();
  RisPhase theta;
  theta.theta = VecC(l);
  for (int i = 0; i < l; ++i)
    theta.theta(i) = std::exp(Complex(0.0, rng.uniform(0.0, 2.0 * std::numbers::pi)));
  return {f, theta};
}

// Value of the affine minorization for device slot i at an arbitrary point.
double surrogate_value(const SurrogateCoeffs& sc, std::size_t i, const Beamformer& f,
                       const RisPhase& theta, double k) {
  const Complex fa = f.f.dot(sc.a[i]);
  Complex tb(0.0, 0.0);
  if (theta.theta.size() > 0) tb = theta.theta.dot(sc.b[i]);
  return (sc.c[i] - 2.0 * (fa + tb).real()) / (k * k);
}

}  // namespace

TEST_CASE("linearization touches the objective at the expansion point") {
  RngStream rng(2026, 41);
  for (double tau : {1.0, 3.0}) {
    Instance ins = random_instance(3, 4, 3, rng);
    auto [f, theta] = random_point(3, 4, rng);
    SurrogateCoeffs sc = surrogate_coeffs(f, theta, ins.mask, ins.ch, tau);
    REQUIRE(sc.active.size() == 3);
    for (std::size_t i = 0; i < sc.active.size(); ++i) {
      const int m = sc.active[i];
      const VecC h = effective_channel(ins.ch, m, theta.theta);
      const double gain2 = std::norm(f.f.dot(h));
      const double k = ins.counts[std::size_t(m)];
      CHECK(surrogate_value(sc, i, f, theta, k) ==
            doctest::Approx(-gain2 / (k * k)).epsilon(1e-9));
    }
  }
}

TEST_CASE("proximal weight enters the coefficients linearly") {
  RngStream rng(7, 3);
  Instance ins = random_instance(2, 3, 2, rng);
  auto [f, theta] = random_point(2, 3, rng);
  SurrogateCoeffs s1 = surrogate_coeffs(f, theta, ins.mask, ins.ch, 1.0);
  SurrogateCoeffs s2 = surrogate_coeffs(f, theta, ins.mask, ins.ch, 2.0);
  for (std::size_t i = 0; i < s1.active.size(); ++i) {
    CHECK((s2.a[i] - s1.a[i] - f.f).norm() < 1e-12);
    CHECK((s2.b[i] - s1.b[i] - theta.theta).norm() < 1e-12);
  }
}

TEST_CASE("surrogate gradient matches a finite difference of the objective") {
  // A negligible proximal weight isolates the pure linearization.
  const double tau = 1e-10;
  RngStream rng(8, 2);
  Instance ins = random_instance(2, 2, 2, rng);
  auto [f, theta] = random_point(2, 2, rng);
  SurrogateCoeffs sc = surrogate_coeffs(f, theta, ins.mask, ins.ch, tau);

  const double h = 1e-5;
  for (std::size_t i = 0; i < sc.active.size(); ++i) {
    const int m = sc.active[i];
    const double k = ins.counts[std::size_t(m)];
    auto u = [&](const Beamformer& ff, const RisPhase& tt) {
      return -std::norm(ff.f.dot(effective_channel(ins.ch, m, tt.theta))) / (k * k);
    };
    for (int rep = 0; rep < 4; ++rep) {
      Beamformer df;
      df.f = rng.cnormal_vector(2, 0.5);
      RisPhase dt;
      dt.theta = rng.cnormal_vector(2, 0.5);

      Beamformer fp, fm;
      RisPhase tp, tm;
      fp.f = f.f + h * df.f;
      fm.f = f.f - h * df.f;
      tp.theta = theta.theta + h * dt.theta;
      tm.theta = theta.theta - h * dt.theta;

      const double fd_u = (u(fp, tp) - u(fm, tm)) / (2.0 * h);
      const double fd_s = (surrogate_value(sc, i, fp, tp, k) -
                           surrogate_value(sc, i, fm, tm, k)) /
                          (2.0 * h);
      CHECK(fd_u == doctest::Approx(fd_s).epsilon(1e-5));
    }
  }
}

TEST_CASE("dual of a single-device surrogate") {
  RngStream rng(9, 4);
  Instance ins = random_instance(3, 2, 1, rng);
  ins.counts = {3.0};
  auto [f, theta] = random_point(3, 2, rng);
  SurrogateCoeffs sc = surrogate_coeffs(f, theta, ins.mask, ins.ch, 1.0);

  DualWeights w = solve_dual(sc, ins.counts, DualSolverConfig{});
  REQUIRE(w.zeta.size() == 1);
  CHECK(w.zeta(0) == doctest::Approx(1.0 / 9.0).epsilon(1e-12));

  double norm_b1 = 0.0;
  for (int l = 0; l < 2; ++l) norm_b1 += std::abs(sc.b[0](l));
  const double expect = (sc.c[0] - 2.0 * sc.a[0].norm() - 2.0 * norm_b1) / 9.0;
  CHECK(w.value == doctest::Approx(expect).epsilon(1e-10));
  CHECK(dual_objective(w.zeta, sc) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("identical devices give a flat dual") {
  RngStream rng(10, 5);
  MatC h_dp = rng.cnormal_matrix(2, 1);
  MatC h_rp = rng.cnormal_matrix(2, 2);
  MatC h_dr = rng.cnormal_matrix(2, 1);
  MatC h_dp2(2, 2), h_dr2(2, 2);
  h_dp2 << h_dp, h_dp;
  h_dr2 << h_dr, h_dr;
  ChannelRealization ch = make_realization(h_dp2, h_rp, h_dr2);
  std::vector<double> counts{2.0, 2.0};

  auto [f, theta] = random_point(2, 2, rng);
  SurrogateCoeffs sc = surrogate_coeffs(f, theta, SelectionMask::all_active(2), ch, 1.0);

  // Equal coefficients make the dual constant on the scaled simplex, so the
  // solver must return that common value.
  VecR corner = VecR::Zero(2);
  corner(0) = 1.0 / 4.0;
  const double flat = dual_objective(corner, sc);
  DualWeights w = solve_dual(sc, counts, DualSolverConfig{});
  CHECK(w.value == doctest::Approx(flat).epsilon(1e-9));
  CHECK(w.zeta.minCoeff() >= 0.0);
  CHECK(4.0 * w.zeta.sum() == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("dual weights stay on the scaled simplex") {
  RngStream rng(11, 6);
  Instance ins = random_instance(3, 4, 4, rng);
  auto [f, theta] = random_point(3, 4, rng);
  SurrogateCoeffs sc = surrogate_coeffs(f, theta, ins.mask, ins.ch, 1.0);
  DualWeights w = solve_dual(sc, ins.counts, DualSolverConfig{});
  REQUIRE(w.zeta.size() == 4);
  CHECK(w.zeta.minCoeff() >= 0.0);
  double s = 0.0;
  for (int i = 0; i < 4; ++i) {
    const double k = ins.counts[std::size_t(sc.active[std::size_t(i)])];
    s += k * k * w.zeta(i);
  }
  CHECK(s == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(w.iters >= 1);
}

TEST_CASE("primal recovery") {
  RngStream rng(12, 7);
  Instance ins = random_instance(3, 3, 2, rng);
  auto [f0, theta0] = random_point(3, 3, rng);
  SurrogateCoeffs sc = surrogate_coeffs(f0, theta0, ins.mask, ins.ch, 1.0);

  SUBCASE("single positive weight aligns with that device's coefficients") {
    VecR zeta = VecR::Zero(2);
    zeta(0) = 0.7;
    auto [f, theta] = primal_update(zeta, sc, f0);
    CHECK((f.f - sc.a[0] / sc.a[0].norm()).norm() < 1e-12);
    for (int l = 0; l < 3; ++l)
      CHECK(std::abs(theta.theta(l) - sc.b[0](l) / std::abs(sc.b[0](l))) < 1e-12);
  }

  SUBCASE("the closure conditions hold at the recovered point") {
    VecR zeta(2);
    zeta << 0.4, 0.6;
    auto [f, theta] = primal_update(zeta, sc, f0);
    CHECK(std::abs(f.f.norm() - 1.0) < 1e-12);

    VecC u = zeta(0) * sc.a[0] + zeta(1) * sc.a[1];
    VecC v = zeta(0) * sc.b[0] + zeta(1) * sc.b[1];
    // Cauchy-Schwarz tightness for the beamformer, entrywise alignment for
    // the phases.
    CHECK(f.f.dot(u).real() == doctest::Approx(u.norm()).epsilon(1e-9));
    double dot = 0.0, l1 = 0.0;
    for (int l = 0; l < 3; ++l) {
      dot += (std::conj(theta.theta(l)) * v(l)).real();
      l1 += std::abs(v(l));
    }
    CHECK(dot == doctest::Approx(l1).epsilon(1e-9));
  }

  SUBCASE("vanishing combined beamformer falls back to the expansion point") {
    SurrogateCoeffs zero = sc;
    zero.a[0] = VecC::Zero(3);
    zero.a[1] = VecC::Zero(3);
    VecR zeta(2);
    zeta << 0.5, 0.5;
    auto [f, theta] = primal_update(zeta, zero, f0);
    CHECK((f.f - f0.f).norm() == 0.0);
  }

  SUBCASE("vanishing phase column parks the element at +1") {
    SurrogateCoeffs zero = sc;
    zero.b[0](1) = Complex(0.0, 0.0);
    zero.b[1](1) = Complex(0.0, 0.0);
    VecR zeta(2);
    zeta << 0.5, 0.5;
    auto [f, theta] = primal_update(zeta, zero, f0);
    CHECK(theta.theta(1) == Complex(1.0, 0.0));
  }
}

TEST_CASE("iteration behavior") {
  RngStream rng(13, 8);
  Instance ins = random_instance(3, 4, 3, rng);
  ScaConfig cfg;
  cfg.max_iters = 30;
  cfg.epsilon = 1e-9;
  cfg.dual.max_iters = 2000;
  cfg.dual.polish = true;

  SUBCASE("zero iterations return the starting point") {
    auto init = default_init(ins.mask, ins.ch, ins.counts);
    ScaConfig none = cfg;
    none.max_iters = 0;
    ScaState st = sca_optimize(ins.mask, ins.ch, ins.counts, none, init);
    CHECK(st.iters == 0);
    CHECK((st.f.f - init.first.f).norm() == 0.0);
    CHECK(st.objective ==
          doctest::Approx(sca_objective(ins.mask, ins.ch, ins.counts, init.first,
                                        init.second))
              .epsilon(1e-12));
  }

  SUBCASE("iterates stay feasible and the incumbent only improves") {
    ScaState st = sca_optimize(ins.mask, ins.ch, ins.counts, cfg);
    CHECK(std::abs(st.f.f.norm() - 1.0) < 1e-12);
    for (int l = 0; l < 4; ++l)
      CHECK(std::abs(std::abs(st.theta.theta(l)) - 1.0) < 1e-12);

    auto init = default_init(ins.mask, ins.ch, ins.counts);
    const double start =
        sca_objective(ins.mask, ins.ch, ins.counts, init.first, init.second);
    CHECK(st.best_objective <= start + 1e-12);
    CHECK(st.best_objective <= st.last_objective + 1e-12);
    CHECK(st.objective == doctest::Approx(sca_objective(ins.mask, ins.ch, ins.counts,
                                                        st.f, st.theta))
                              .epsilon(1e-10));
  }

  SUBCASE("restarting from the solution stops within two rounds") {
    ScaState st = sca_optimize(ins.mask, ins.ch, ins.counts, cfg);
    ScaConfig warm = cfg;
    warm.epsilon = 1e-6;
    ScaState again = sca_optimize(ins.mask, ins.ch, ins.counts, warm,
                                  std::make_pair(st.f, st.theta));
    CHECK(again.converged);
    CHECK(again.iters <= 2);
    CHECK(again.best_objective <= st.best_objective + 1e-6 * std::abs(st.best_objective));
  }

  SUBCASE("a loose threshold stops immediately and reports convergence") {
    ScaConfig loose = cfg;
    loose.epsilon = 1e9;
    ScaState st = sca_optimize(ins.mask, ins.ch, ins.counts, loose);
    CHECK(st.converged);
    CHECK(st.iters <= 2);
  }
}

TEST_CASE("single-device solution is the matched filter") {
  RngStream rng(14, 9);
  MatC h_dp = rng.cnormal_matrix(4, 1);
  ChannelRealization ch = make_realization(h_dp, MatC(4, 0), MatC(0, 1));
  std::vector<double> counts{2.0};
  ScaConfig cfg;
  cfg.max_iters = 50;
  cfg.epsilon = 1e-12;
  cfg.dual.polish = true;

  ScaState st = sca_optimize(SelectionMask::all_active(1), ch, counts, cfg);
  const double best = -h_dp.col(0).squaredNorm() / 4.0;
  CHECK(st.best_objective == doctest::Approx(best).epsilon(1e-6));

  SUBCASE("scalar antenna case is exact regardless of the beamformer") {
    MatC h1 = rng.cnormal_matrix(1, 1);
    ChannelRealization c1 = make_realization(h1, MatC(1, 0), MatC(0, 1));
    ScaState s1 = sca_optimize(SelectionMask::all_active(1), c1, {3.0}, cfg);
    CHECK(s1.best_objective == doctest::Approx(-std::norm(h1(0, 0)) / 9.0).epsilon(1e-9));
  }
}

TEST_CASE("default start uses the binding device's matched filter") {
  RngStream rng(15, 1);
  Instance ins = random_instance(3, 0, 3, rng);
  auto [f, theta] = default_init(ins.mask, ins.ch, ins.counts);
  CHECK(std::abs(f.f.norm() - 1.0) < 1e-12);
  CHECK(theta.theta.size() == 0);

  // The chosen column is the one whose matched-filter value is worst in the
  // K^2-weighted objective.
  int worst = -1;
  double worst_val = 0.0;
  for (int m = 0; m < 3; ++m) {
    const double k = ins.counts[std::size_t(m)];
    const double val = -ins.ch.h_dp.col(m).squaredNorm() / (k * k);
    if (worst < 0 || val > worst_val) {
      worst = m;
      worst_val = val;
    }
  }
  VecC want = ins.ch.h_dp.col(worst) / ins.ch.h_dp.col(worst).norm();
  CHECK(std::abs(f.f.dot(want)) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("phase projection to discrete levels") {
  SUBCASE("one bit snaps the upper half plane to +1") {
    RisPhase t;
    t.theta = VecC(1);
    t.theta(0) = std::exp(Complex(0.0, 0.4 * std::numbers::pi));
    RisPhase q = project_phases(t, 1);
    CHECK(std::abs(q.theta(0) - Complex(1.0, 0.0)) < 1e-12);
    CHECK(q.resolution_bits == 1);
  }

  SUBCASE("grid points are fixed points") {
    const int bits = 3;
    RisPhase t;
    t.theta = VecC(1 << bits);
    for (int k = 0; k < (1 << bits); ++k)
      t.theta(k) = std::exp(Complex(0.0, 2.0 * std::numbers::pi * k / (1 << bits)));
    RisPhase q = project_phases(t, bits);
    for (int k = 0; k < (1 << bits); ++k) CHECK(std::abs(q.theta(k) - t.theta(k)) < 1e-12);
  }

  SUBCASE("many bits approximate the identity") {
    RngStream rng(16, 2);
    RisPhase t;
    t.theta = VecC(32);
    for (int l = 0; l < 32; ++l)
      t.theta(l) = std::exp(Complex(0.0, rng.uniform(0.0, 2.0 * std::numbers::pi)));
    RisPhase q = project_phases(t, 20);
    for (int l = 0; l < 32; ++l) CHECK(std::abs(q.theta(l) - t.theta(l)) < 1e-5);
  }

  SUBCASE("midpoints resolve toward the smaller grid index") {
    RisPhase t;
    t.theta = VecC(2);
    t.theta(0) = Complex(0.0, 1.0);                               // halfway for b = 1
    t.theta(1) = std::exp(Complex(0.0, std::numbers::pi / 4.0));  // halfway for b = 2
    RisPhase q1 = project_phases(t, 1);
    CHECK(std::abs(q1.theta(0) - Complex(1.0, 0.0)) < 1e-12);
    RisPhase q2 = project_phases(t, 2);
    CHECK(std::abs(q2.theta(1) - Complex(1.0, 0.0)) < 1e-12);
  }

  SUBCASE("levels form the expected set") {
    RngStream rng(17, 3);
    RisPhase t;
    t.theta = VecC(64);
    for (int l = 0; l < 64; ++l)
      t.theta(l) = std::exp(Complex(0.0, rng.uniform(0.0, 2.0 * std::numbers::pi)));
    const int bits = 2;
    RisPhase q = project_phases(t, bits);
    for (int l = 0; l < 64; ++l) {
      const double ang = std::arg(q.theta(l));
      const double step = 2.0 * std::numbers::pi / (1 << bits);
      const double ratio = ang / step;
      CHECK(std::abs(ratio - std::round(ratio)) < 1e-9);
    }
  }

  SUBCASE("invalid resolutions are rejected") {
    RisPhase t;
    t.theta = VecC::Ones(1);
    CHECK_THROWS_AS(project_phases(t, 0), std::invalid_argument);
    CHECK_THROWS_AS(project_phases(t, 31), std::invalid_argument);
  }
}
