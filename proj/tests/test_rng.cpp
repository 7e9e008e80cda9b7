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

#include "airfl/rng.hpp"

using namespace airfl;

TEST_CASE("same seed and stream reproduce the same draws") {
  RngStream a(42, 7);
  RngStream b(42, 7);
  for (int i = 0; i < 64; ++i) CHECK(a.uniform() == b.uniform());
  for (int i = 0; i < 64; ++i) CHECK(a.normal() == b.normal());
  for (int i = 0; i < 64; ++i) CHECK(a.uniform_int(0, 1000) == b.uniform_int(0, 1000));
}

TEST_CASE("different stream ids decorrelate") {
  RngStream a(42, 1);
  RngStream b(42, 2);
  int same = 0;
  for (int i = 0; i < 64; ++i)
    if (a.uniform_int(0, 1 << 20) == b.uniform_int(0, 1 << 20)) ++same;
  CHECK(same <= 1);
}

TEST_CASE("split does not consume parent state") {
  RngStream a(9, 3);
  RngStream b(9, 3);
  (void)a.split(17);
  (void)a.split(18);
  for (int i = 0; i < 32; ++i) CHECK(a.uniform() == b.uniform());
}

TEST_CASE("split children are deterministic and keyed") {
  RngStream parent(5, 1);
  RngStream c1 = parent.split(4);
  RngStream c2 = parent.split(4);
  RngStream c3 = parent.split(5);
  CHECK(c1.uniform() == c2.uniform());
  CHECK(c1.uniform() != c3.uniform());
}

TEST_CASE("uniform_int bounds are inclusive") {
  RngStream rng(1, 1);
  bool saw_lo = false, saw_hi = false;
  for (int i = 0; i < 2000; ++i) {
    int v = rng.uniform_int(3, 5);
    CHECK(v >= 3);
    CHECK(v <= 5);
    if (v == 3) saw_lo = true;
    if (v == 5) saw_hi = true;
  }
  CHECK(saw_lo);
  CHECK(saw_hi);
}

TEST_CASE("complex normal has the requested second moment") {
  RngStream rng(2026, 11);
  const int n = 100000;
  double acc = 0.0, mean_re = 0.0, mean_im = 0.0;
  for (int i = 0; i < n; ++i) {
    Complex z = rng.cnormal(1.0);
    acc += std::norm(z);
    mean_re += z.real();
    mean_im += z.imag();
  }
  // |z|^2 has unit mean and unit variance, so three standard errors is
  // 3 / sqrt(n) on the sample mean.
  CHECK(std::abs(acc / n - 1.0) < 3.0 / std::sqrt(double(n)));
  CHECK(std::abs(mean_re / n) < 3.0 / std::sqrt(2.0 * n));
  CHECK(std::abs(mean_im / n) < 3.0 / std::sqrt(2.0 * n));

  double acc4 = 0.0;
  for (int i = 0; i < n; ++i) acc4 += std::norm(rng.cnormal(4.0));
  CHECK(std::abs(acc4 / n - 4.0) < 12.0 / std::sqrt(double(n)));
}

TEST_CASE("categorical follows the weights") {
  RngStream rng(7, 7);
  VecR w(3);
  w << 1.0, 2.0, 1.0;
  int counts[3] = {0, 0, 0};
  const int n = 40000;
  for (int i = 0; i < n; ++i) ++counts[rng.categorical(w)];
  CHECK(std::abs(counts[0] / double(n) - 0.25) < 0.02);
  CHECK(std::abs(counts[1] / double(n) - 0.50) < 0.02);
  CHECK(std::abs(counts[2] / double(n) - 0.25) < 0.02);
}
