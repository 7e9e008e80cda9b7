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

#include "airfl/channel.hpp"

#include <Eigen/SVD>

#include <numbers>
#include <sstream>

using namespace airfl;

namespace {

SystemParams default_params() { return SystemParams{}; }

Geometry simple_geometry(int m_devices) {
  Geometry geo;
  for (int m = 0; m < m_devices; ++m)
    geo.device_positions.push_back(Vec3{-10.0 - m, 2.0 * m, 0.0});
  return geo;
}

}  // namespace

TEST_CASE("wavelength at 915 MHz") {
  SystemParams p = default_params();
  CHECK(p.wavelength() == doctest::Approx(0.32786885245901637).epsilon(1e-15));
  CHECK(p.element_size_x == doctest::Approx(p.wavelength()).epsilon(1e-15));
  CHECK(p.element_size_y == doctest::Approx(p.wavelength()).epsilon(1e-15));
}

TEST_CASE("direct path loss fixed point") {
  SystemParams p = default_params();
  p.gain_ps = 1.0;
  p.gain_device = 1.0;
  p.path_loss_exponent = 2.0;
  const double d = p.wavelength() / (4.0 * std::numbers::pi);
  CHECK(path_loss_direct(d, p) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("direct path loss reference value at 10 m") {
  SystemParams p = default_params();
  CHECK(path_loss_direct(10.0, p) ==
        doctest::Approx(6.109469701062255e-10).epsilon(1e-12));
}

TEST_CASE("direct path loss is positive and decreasing in distance") {
  SystemParams p = default_params();
  double prev = path_loss_direct(1.0, p);
  for (double d = 2.0; d <= 200.0; d *= 2.0) {
    const double cur = path_loss_direct(d, p);
    CHECK(cur > 0.0);
    CHECK(cur < prev);
    prev = cur;
  }
  CHECK_THROWS_AS(path_loss_direct(0.0, p), std::invalid_argument);
}

TEST_CASE("cascaded path loss reference value") {
  SystemParams p = default_params();
  CHECK(path_loss_cascaded(50.0, 20.0, p) ==
        doctest::Approx(9.317320467048408e-08).epsilon(1e-12));
  CHECK(path_loss_ris_ps(50.0, p) * path_loss_device_ris(20.0, p) ==
        doctest::Approx(5.823325291905254e-11).epsilon(1e-12));
}

TEST_CASE("cascaded path loss scales with element count and hop distance") {
  SystemParams p = default_params();
  const double base = path_loss_cascaded(50.0, 20.0, p);

  SystemParams doubled = p;
  doubled.num_ris_elements = 2 * p.num_ris_elements;
  CHECK(path_loss_cascaded(50.0, 20.0, doubled) == doctest::Approx(4.0 * base).epsilon(1e-12));

  CHECK(path_loss_cascaded(50.0, 40.0, p) == doctest::Approx(base / 4.0).epsilon(1e-12));
  CHECK(path_loss_cascaded(100.0, 20.0, p) == doctest::Approx(base / 4.0).epsilon(1e-12));

  // Hop split identity: L^2 times the per-hop factors gives the total.
  const double l2 = double(p.num_ris_elements) * double(p.num_ris_elements);
  CHECK(l2 * path_loss_ris_ps(50.0, p) * path_loss_device_ris(20.0, p) ==
        doctest::Approx(base).epsilon(1e-14));
}

TEST_CASE("steering vector entries are unit modulus with linear phase") {
  const VecC a = ula_steering(6, 0.3);
  REQUIRE(a.size() == 6);
  CHECK(a(0) == Complex(1.0, 0.0));
  for (int n = 0; n < 6; ++n)
    CHECK(std::abs(a(n)) == doctest::Approx(1.0).epsilon(1e-15));
  for (int n = 0; n + 1 < 6; ++n)
    CHECK(std::arg(a(n + 1) * std::conj(a(n))) ==
          doctest::Approx(std::numbers::pi * 0.3).epsilon(1e-12));
}

TEST_CASE("cascade matrices equal surface channel times element diagonal") {
  RngStream rng(3, 1);
  MatC h_dp = rng.cnormal_matrix(4, 3);
  MatC h_rp = rng.cnormal_matrix(4, 5);
  MatC h_dr = rng.cnormal_matrix(5, 3);
  ChannelRealization ch = make_realization(h_dp, h_rp, h_dr);
  REQUIRE(ch.cascades.size() == 3);
  for (int m = 0; m < 3; ++m)
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 5; ++c)
        CHECK(ch.cascades[m](r, c) == h_rp(r, c) * h_dr(c, m));
}

TEST_CASE("effective channel special cases and factorization") {
  RngStream rng(4, 1);
  MatC h_dp = rng.cnormal_matrix(3, 2);
  MatC h_rp = rng.cnormal_matrix(3, 4);
  MatC h_dr = rng.cnormal_matrix(4, 2);
  ChannelRealization ch = make_realization(h_dp, h_rp, h_dr);

  SUBCASE("zero phases leave only the direct column") {
    VecC theta = VecC::Zero(4);
    for (int m = 0; m < 2; ++m) {
      VecC h = effective_channel(ch, m, theta);
      CHECK((h - h_dp.col(m)).norm() < 1e-15);
    }
  }

  SUBCASE("single element with unit phase adds one cascade column") {
    ChannelRealization one = make_realization(h_dp, h_rp.col(0), h_dr.topRows(1));
    VecC theta = VecC::Ones(1);
    for (int m = 0; m < 2; ++m) {
      VecC expect = h_dp.col(m) + h_rp.col(0) * h_dr(0, m);
      CHECK((effective_channel(one, m, theta) - expect).norm() < 1e-14);
    }
  }

  SUBCASE("the two cascade factorizations agree") {
    RngStream prng(5, 1);
    VecC theta(4);
    for (int i = 0; i < 4; ++i)
      theta(i) = std::exp(Complex(0.0, prng.uniform(0.0, 2.0 * std::numbers::pi)));
    for (int m = 0; m < 2; ++m) {
      VecC via_cascade = ch.h_dp.col(m) + ch.cascades[m] * theta;
      VecC via_diag = ch.h_dp.col(m) + ch.h_rp * theta.cwiseProduct(ch.h_dr.col(m));
      CHECK((via_cascade - via_diag).norm() / via_cascade.norm() < 1e-12);
      CHECK((effective_channel(ch, m, theta) - via_cascade).norm() < 1e-14);
    }
  }

  SUBCASE("surface contribution is additive in the phases") {
    RngStream prng(6, 1);
    VecC t1 = prng.cnormal_vector(4), t2 = prng.cnormal_vector(4);
    for (int m = 0; m < 2; ++m) {
      VecC lhs = effective_channel(ch, m, t1 + t2);
      VecC rhs = effective_channel(ch, m, t1) + effective_channel(ch, m, t2) - h_dp.col(m);
      CHECK((lhs - rhs).norm() / lhs.norm() < 1e-12);
    }
  }

  SUBCASE("no surface elements") {
    ChannelRealization bare = make_realization(h_dp, MatC(3, 0), MatC(0, 2));
    VecC empty(0);
    CHECK((effective_channel(bare, 1, empty) - h_dp.col(1)).norm() == 0.0);
  }
}

TEST_CASE("rayleigh draws carry the geometric attenuation in their variance") {
  SystemParams p = default_params();
  p.num_antennas = 1;
  p.num_ris_elements = 1;
  p.num_devices = 1;
  Geometry geo = simple_geometry(1);
  SmallScaleModel iid{0.0, 0.0, 0.0};

  const double pl_dp = path_loss_direct(geo.distance_device_ps(0), p);
  const double pl_rp = path_loss_ris_ps(geo.distance_ris_ps(), p);
  const double pl_dr = path_loss_device_ris(geo.distance_device_ris(0), p);

  RngStream rng(2026, 9);
  const int n = 20000;
  double acc_dp = 0.0, acc_rp = 0.0, acc_dr = 0.0;
  for (int i = 0; i < n; ++i) {
    ChannelRealization ch = draw_channels(geo, p, iid, rng);
    acc_dp += std::norm(ch.h_dp(0, 0));
    acc_rp += std::norm(ch.h_rp(0, 0));
    acc_dr += std::norm(ch.h_dr(0, 0));
  }
  // Each |entry|^2 is exponential, so the relative standard error of the
  // mean is 1/sqrt(n); allow three of them.
  const double tol = 3.0 / std::sqrt(double(n));
  CHECK(std::abs(acc_dp / n / pl_dp - 1.0) < tol);
  CHECK(std::abs(acc_rp / n / pl_rp - 1.0) < tol);
  CHECK(std::abs(acc_dr / n / pl_dr - 1.0) < tol);
}

TEST_CASE("large rician factor pins the surface link to its deterministic part") {
  SystemParams p = default_params();
  p.num_antennas = 4;
  p.num_ris_elements = 8;
  p.num_devices = 2;
  Geometry geo = simple_geometry(2);
  SmallScaleModel model{1e9, 0.0, 0.0};

  RngStream rng(77, 1);
  ChannelRealization ch = draw_channels(geo, p, model, rng);
  const double scale = std::sqrt(path_loss_ris_ps(geo.distance_ris_ps(), p));

  // The deterministic component is an outer product of unit-modulus steering
  // vectors: every entry has modulus sqrt(path loss) and the matrix is rank 1.
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 8; ++c)
      CHECK(std::abs(ch.h_rp(r, c)) == doctest::Approx(scale).epsilon(1e-3));

  Eigen::JacobiSVD<MatC> svd(ch.h_rp);
  CHECK(svd.singularValues()(1) / svd.singularValues()(0) < 1e-3);
}

TEST_CASE("channel draws are deterministic in the stream") {
  SystemParams p = default_params();
  p.num_antennas = 3;
  p.num_ris_elements = 4;
  p.num_devices = 2;
  Geometry geo = simple_geometry(2);
  SmallScaleModel model{db_to_linear(3.0), 0.0, 0.0};

  RngStream r1(123, 4), r2(123, 4);
  ChannelRealization a = draw_channels(geo, p, model, r1);
  ChannelRealization b = draw_channels(geo, p, model, r2);
  CHECK(a.h_dp == b.h_dp);
  CHECK(a.h_rp == b.h_rp);
  CHECK(a.h_dr == b.h_dr);

  RngStream r3(124, 4);
  ChannelRealization c = draw_channels(geo, p, model, r3);
  CHECK(a.h_dp != c.h_dp);
}

TEST_CASE("placement regions") {
  SystemParams p = default_params();
  p.num_devices = 9;
  RngStream rng(1, 2);

  SUBCASE("concentrated layout keeps every device in the near patch") {
    Geometry geo = place_devices(PlacementSetting::kConcentrated, p, rng);
    REQUIRE(geo.device_positions.size() == 9);
    for (const auto& v : geo.device_positions) {
      CHECK(v.x() >= -20.0);
      CHECK(v.x() <= 0.0);
      CHECK(std::abs(v.y()) <= 10.0);
      CHECK(v.z() == 0.0);
    }
  }

  SUBCASE("two clusters split the population near and far") {
    Geometry geo = place_devices(PlacementSetting::kTwoCluster, p, rng);
    REQUIRE(geo.device_positions.size() == 9);
    for (int m = 0; m < 5; ++m) {
      CHECK(geo.device_positions[m].x() >= -20.0);
      CHECK(geo.device_positions[m].x() <= 0.0);
    }
    for (int m = 5; m < 9; ++m) {
      CHECK(geo.device_positions[m].x() >= 100.0);
      CHECK(geo.device_positions[m].x() <= 120.0);
    }
  }

  SUBCASE("two clusters need at least two devices") {
    SystemParams one = p;
    one.num_devices = 1;
    CHECK_THROWS_AS(place_devices(PlacementSetting::kTwoCluster, one, rng),
                    std::invalid_argument);
  }
}

TEST_CASE("realization round-trips through the binary format") {
  RngStream rng(8, 8);
  ChannelRealization ch = make_realization(rng.cnormal_matrix(3, 4), rng.cnormal_matrix(3, 5),
                                           rng.cnormal_matrix(5, 4));
  std::stringstream ss;
  save_realization(ch, ss);
  ChannelRealization back = load_realization(ss);
  CHECK(back.h_dp == ch.h_dp);
  CHECK(back.h_rp == ch.h_rp);
  CHECK(back.h_dr == ch.h_dr);
  REQUIRE(back.cascades.size() == ch.cascades.size());
  for (std::size_t m = 0; m < ch.cascades.size(); ++m)
    CHECK(back.cascades[m] == ch.cascades[m]);

  SUBCASE("truncated payload is rejected") {
    std::string full = ss.str();
    std::stringstream cut(full.substr(0, full.size() / 2));
    CHECK_THROWS_AS(load_realization(cut), std::runtime_error);
  }

  SUBCASE("wrong magic is rejected") {
    std::stringstream bogus("not a channel file at all........");
    CHECK_THROWS_AS(load_realization(bogus), std::runtime_error);
  }
}

TEST_CASE("mismatched dimensions are rejected when assembling") {
  RngStream rng(9, 9);
  CHECK_THROWS_AS(make_realization(rng.cnormal_matrix(3, 2), rng.cnormal_matrix(4, 5),
                                   rng.cnormal_matrix(5, 2)),
                  std::invalid_argument);
  CHECK_THROWS_AS(make_realization(rng.cnormal_matrix(3, 2), rng.cnormal_matrix(3, 5),
                                   rng.cnormal_matrix(4, 2)),
                  std::invalid_argument);
  CHECK_THROWS_AS(make_realization(rng.cnormal_matrix(3, 2), rng.cnormal_matrix(3, 5),
                                   rng.cnormal_matrix(5, 3)),
                  std::invalid_argument);
}
