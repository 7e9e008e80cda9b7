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

#include "airfl/channel.hpp"
#include "airfl/flsim.hpp"
#include "airfl/gibbs.hpp"
#include "airfl/types.hpp"

#include <json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace airfl {

// Per-device sample-count specification.
struct CountsSpec {
  enum class Mode { kEqual, kClustered, kExplicit };
  Mode mode = Mode::kEqual;
  double equal_value = 750.0;
  double high_min = 1000.0, high_max = 2000.0;  // clustered: a random half
  double low_min = 100.0, low_max = 200.0;      // ... and the rest
  std::vector<double> explicit_values;

  std::vector<double> build(int num_devices, RngStream& rng) const;
};

// Fully resolved experiment description. JSON in, JSON echo out; every field
// has a default so a minimal config can be tiny, and unknown keys are
// rejected so typos cannot silently fall back to defaults.
struct ExperimentConfig {
  SystemParams params;
  PlacementSetting setting = PlacementSetting::kConcentrated;
  Vec3 ps_position{-50.0, 0.0, 10.0};
  Vec3 ris_position{0.0, 0.0, 10.0};

  std::string channel_model = "iid";  // "iid" or "rician"
  SmallScaleModel small_scale{0.0, 0.0, 0.0};
  int block_period = 0;  // 0: static channel

  TaskKind task_kind = TaskKind::kRidge;
  int task_dim = 20;
  double task_reg = 0.1;
  CountsSpec counts;

  GibbsConfig optimizer;
  int phase_bits = 0;

  int rounds = 200;
  double learning_rate = 0.0;  // 0: 1/omega from the task
  int batch_size = 0;          // 0: exact batch gradients
  int trajectories = 100;
  std::uint64_t seed = 1;
  PolicyKind policy = PolicyKind::kOptimized;

  std::string out_dir = ".";

  static ExperimentConfig from_json(const nlohmann::json& j);
  static ExperimentConfig from_file(const std::string& path);
  nlohmann::json to_json() const;  // resolved echo, derived quantities included

  Geometry make_geometry(RngStream& rng) const;
  std::vector<double> make_counts(RngStream& rng) const;
  TrainContext make_context(RngStream& rng) const;
};

}  // namespace airfl
