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

#include "airfl/types.hpp"

#include <cstdint>
#include <random>

namespace airfl {

namespace detail {
// SplitMix64 finalizer; used to turn (seed, stream) pairs into well-mixed
// engine seeds so that sibling streams are statistically independent.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}
}  // namespace detail

// Deterministic random stream addressed by (master seed, stream id).
// split(key) derives an independent child stream from the address alone,
// without consuming parent state, so parallel work units can be seeded by
// index and reproduce bit-identically regardless of scheduling.
class RngStream {
 public:
  RngStream() : RngStream(0, 0) {}
  RngStream(std::uint64_t master_seed, std::uint64_t stream_id)
      : master_(master_seed), stream_(stream_id) {
    std::uint64_t s = master_seed;
    std::uint64_t a = detail::splitmix64(s);
    s ^= stream_id * 0xD1B54A32D192ED03ULL;
    std::uint64_t b = detail::splitmix64(s);
    std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                      static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
    engine_.seed(seq);
  }

  RngStream split(std::uint64_t key) const {
    std::uint64_t s = master_ ^ (0xA0761D6478BD642FULL + stream_);
    std::uint64_t mixed = detail::splitmix64(s);
    return RngStream(mixed, key);
  }

  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }
  int uniform_int(int lo, int hi) {  // inclusive bounds
    return std::uniform_int_distribution<int>(lo, hi)(engine_);
  }
  double normal(double mean = 0.0, double stddev = 1.0) {
    return std::normal_distribution<double>(mean, stddev)(engine_);
  }

  // Circularly symmetric complex Gaussian with E|z|^2 = var.
  Complex cnormal(double var = 1.0) {
    const double s = std::sqrt(var / 2.0);
    return {normal(0.0, s), normal(0.0, s)};
  }

  VecC cnormal_vector(int n, double var = 1.0) {
    VecC v(n);
    for (int i = 0; i < n; ++i) v(i) = cnormal(var);
    return v;
  }

  MatC cnormal_matrix(int rows, int cols, double var = 1.0) {
    MatC m(rows, cols);
    for (int c = 0; c < cols; ++c)
      for (int r = 0; r < rows; ++r) m(r, c) = cnormal(var);
    return m;
  }

  // Draw an index with probability proportional to weights (need not sum to 1).
  int categorical(const VecR& weights) {
    double total = weights.sum();
    double u = uniform() * total;
    double acc = 0.0;
    for (int i = 0; i < weights.size(); ++i) {
      acc += weights(i);
      if (u < acc) return i;
    }
    return static_cast<int>(weights.size()) - 1;
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::uint64_t master_;
  std::uint64_t stream_;
  std::mt19937_64 engine_;
};

}  // namespace airfl
