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

#include "airfl/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

namespace airfl {

using nlohmann::json;

namespace {

void check_keys(const json& j, const std::string& path,
                std::initializer_list<const char*> allowed) {
  if (!j.is_object()) {
    throw std::invalid_argument("config: expected an object at '" + path + "'");
  }
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& item : j.items()) {
    if (ok.find(item.key()) == ok.end()) {
      throw std::invalid_argument("config: unknown key '" + path + "." +
                                  item.key() + "'");
    }
  }
}

double get_num(const json& j, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number()) {
    throw std::invalid_argument(std::string("config: '") + key +
                                "' must be a number");
  }
  return j.at(key).get<double>();
}

int get_int(const json& j, const char* key, int fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number_integer()) {
    throw std::invalid_argument(std::string("config: '") + key +
                                "' must be an integer");
  }
  return j.at(key).get<int>();
}

bool get_bool(const json& j, const char* key, bool fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_boolean()) {
    throw std::invalid_argument(std::string("config: '") + key +
                                "' must be a boolean");
  }
  return j.at(key).get<bool>();
}

std::string get_str(const json& j, const char* key, const std::string& fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_string()) {
    throw std::invalid_argument(std::string("config: '") + key +
                                "' must be a string");
  }
  return j.at(key).get<std::string>();
}

Vec3 get_vec3(const json& j, const char* key, const Vec3& fallback) {
  if (!j.contains(key)) return fallback;
  const auto& a = j.at(key);
  if (!a.is_array() || a.size() != 3) {
    throw std::invalid_argument(std::string("config: '") + key +
                                "' must be an array of 3 numbers");
  }
  return Vec3{a[0].get<double>(), a[1].get<double>(), a[2].get<double>()};
}

}  // namespace

std::vector<double> CountsSpec::build(int num_devices, RngStream& rng) const {
  if (num_devices <= 0) {
    throw std::invalid_argument("counts: number of devices must be positive");
  }
  std::vector<double> out(static_cast<std::size_t>(num_devices));
  switch (mode) {
    case Mode::kEqual:
      std::fill(out.begin(), out.end(), equal_value);
      break;
    case Mode::kClustered: {
      std::vector<int> order(static_cast<std::size_t>(num_devices));
      std::iota(order.begin(), order.end(), 0);
      std::shuffle(order.begin(), order.end(), rng.engine());
      const int half = num_devices / 2;
      for (int i = 0; i < num_devices; ++i) {
        const bool high = i < half;
        const double lo = high ? high_min : low_min;
        const double hi = high ? high_max : low_max;
        out[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] =
            static_cast<double>(
                rng.uniform_int(static_cast<int>(lo), static_cast<int>(hi)));
      }
      break;
    }
    case Mode::kExplicit:
      if (static_cast<int>(explicit_values.size()) != num_devices) {
        throw std::invalid_argument(
            "counts: explicit values list does not match the device count");
      }
      out = explicit_values;
      break;
  }
  for (double k : out) {
    if (!(k > 0.0) || k != std::floor(k)) {
      throw std::invalid_argument("counts: entries must be positive integers");
    }
  }
  return out;
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  // "derived" is emitted by to_json() for documentation; accepting it here
  // keeps the resolved echo loadable as-is.
  check_keys(j, "$", {"system", "geometry", "channel", "task", "optimizer",
                      "run", "output", "derived"});
  ExperimentConfig cfg;

  if (j.contains("system")) {
    const auto& s = j.at("system");
    check_keys(s, "system",
               {"num_antennas", "num_ris_elements", "num_devices",
                "max_power_db", "noise_power_db", "carrier_freq_hz",
                "path_loss_exponent", "gain_ps_dbi", "gain_device_dbi",
                "gain_ris_dbi", "element_size_x_m", "element_size_y_m"});
    auto& p = cfg.params;
    p.num_antennas = get_int(s, "num_antennas", p.num_antennas);
    p.num_ris_elements = get_int(s, "num_ris_elements", p.num_ris_elements);
    p.num_devices = get_int(s, "num_devices", p.num_devices);
    if (s.contains("max_power_db")) {
      p.max_power = db_to_linear(get_num(s, "max_power_db", 0.0));
    }
    if (s.contains("noise_power_db")) {
      p.noise_power = db_to_linear(get_num(s, "noise_power_db", 0.0));
    }
    p.carrier_freq = get_num(s, "carrier_freq_hz", p.carrier_freq);
    p.path_loss_exponent = get_num(s, "path_loss_exponent", p.path_loss_exponent);
    if (s.contains("gain_ps_dbi")) {
      p.gain_ps = db_to_linear(get_num(s, "gain_ps_dbi", 0.0));
    }
    if (s.contains("gain_device_dbi")) {
      p.gain_device = db_to_linear(get_num(s, "gain_device_dbi", 0.0));
    }
    if (s.contains("gain_ris_dbi")) {
      p.gain_ris = db_to_linear(get_num(s, "gain_ris_dbi", 0.0));
    }
    const double wl = kSpeedOfLight / p.carrier_freq;
    p.element_size_x = get_num(s, "element_size_x_m", wl);
    p.element_size_y = get_num(s, "element_size_y_m", wl);
  } else {
    const double wl = cfg.params.wavelength();
    cfg.params.element_size_x = wl;
    cfg.params.element_size_y = wl;
  }
  cfg.params.validate();

  if (j.contains("geometry")) {
    const auto& g = j.at("geometry");
    check_keys(g, "geometry", {"placement", "ps_position", "ris_position"});
    const std::string placement = get_str(g, "placement", "concentrated");
    if (placement == "concentrated") {
      cfg.setting = PlacementSetting::kConcentrated;
    } else if (placement == "two_cluster") {
      cfg.setting = PlacementSetting::kTwoCluster;
    } else {
      throw std::invalid_argument(
          "config: geometry.placement must be 'concentrated' or 'two_cluster'");
    }
    cfg.ps_position = get_vec3(g, "ps_position", cfg.ps_position);
    cfg.ris_position = get_vec3(g, "ris_position", cfg.ris_position);
  }

  if (j.contains("channel")) {
    const auto& c = j.at("channel");
    check_keys(c, "channel",
               {"model", "kappa_ris_ps", "kappa_direct", "kappa_device_ris",
                "block_period"});
    cfg.channel_model = get_str(c, "model", "iid");
    if (cfg.channel_model == "iid") {
      cfg.small_scale = SmallScaleModel{0.0, 0.0, 0.0};
    } else if (cfg.channel_model == "rician") {
      cfg.small_scale = SmallScaleModel{};
    } else {
      throw std::invalid_argument(
          "config: channel.model must be 'iid' or 'rician'");
    }
    cfg.small_scale.kappa_ris_ps =
        get_num(c, "kappa_ris_ps", cfg.small_scale.kappa_ris_ps);
    cfg.small_scale.kappa_direct =
        get_num(c, "kappa_direct", cfg.small_scale.kappa_direct);
    cfg.small_scale.kappa_device_ris =
        get_num(c, "kappa_device_ris", cfg.small_scale.kappa_device_ris);
    if (cfg.small_scale.kappa_ris_ps < 0.0 ||
        cfg.small_scale.kappa_direct < 0.0 ||
        cfg.small_scale.kappa_device_ris < 0.0) {
      throw std::invalid_argument("config: Rician factors must be >= 0");
    }
    cfg.block_period = get_int(c, "block_period", 0);
    if (cfg.block_period < 0) {
      throw std::invalid_argument("config: channel.block_period must be >= 0");
    }
  }

  if (j.contains("task")) {
    const auto& t = j.at("task");
    check_keys(t, "task", {"kind", "dim", "regularizer", "counts"});
    const std::string kind = get_str(t, "kind", "ridge");
    if (kind == "ridge") {
      cfg.task_kind = TaskKind::kRidge;
    } else if (kind == "logistic") {
      cfg.task_kind = TaskKind::kLogistic;
    } else {
      throw std::invalid_argument("config: task.kind must be 'ridge' or 'logistic'");
    }
    cfg.task_dim = get_int(t, "dim", cfg.task_dim);
    cfg.task_reg = get_num(t, "regularizer", cfg.task_reg);
    if (cfg.task_dim <= 0) {
      throw std::invalid_argument("config: task.dim must be positive");
    }
    if (!(cfg.task_reg > 0.0)) {
      throw std::invalid_argument("config: task.regularizer must be positive");
    }
    if (t.contains("counts")) {
      const auto& k = t.at("counts");
      check_keys(k, "task.counts",
                 {"mode", "value", "high_range", "low_range", "values"});
      const std::string mode = get_str(k, "mode", "equal");
      if (mode == "equal") {
        cfg.counts.mode = CountsSpec::Mode::kEqual;
        cfg.counts.equal_value = get_num(k, "value", cfg.counts.equal_value);
      } else if (mode == "clustered") {
        cfg.counts.mode = CountsSpec::Mode::kClustered;
        if (k.contains("high_range")) {
          const auto& r = k.at("high_range");
          if (!r.is_array() || r.size() != 2) {
            throw std::invalid_argument(
                "config: task.counts.high_range must be [lo, hi]");
          }
          cfg.counts.high_min = r[0].get<double>();
          cfg.counts.high_max = r[1].get<double>();
        }
        if (k.contains("low_range")) {
          const auto& r = k.at("low_range");
          if (!r.is_array() || r.size() != 2) {
            throw std::invalid_argument(
                "config: task.counts.low_range must be [lo, hi]");
          }
          cfg.counts.low_min = r[0].get<double>();
          cfg.counts.low_max = r[1].get<double>();
        }
      } else if (mode == "explicit") {
        cfg.counts.mode = CountsSpec::Mode::kExplicit;
        if (!k.contains("values") || !k.at("values").is_array()) {
          throw std::invalid_argument(
              "config: task.counts.values must be an array");
        }
        cfg.counts.explicit_values.clear();
        for (const auto& v : k.at("values")) {
          cfg.counts.explicit_values.push_back(v.get<double>());
        }
      } else {
        throw std::invalid_argument(
            "config: task.counts.mode must be 'equal', 'clustered' or 'explicit'");
      }
    }
  }

  if (j.contains("optimizer")) {
    const auto& o = j.at("optimizer");
    check_keys(o, "optimizer",
               {"beta0", "rho", "j_max", "tau", "i_max", "epsilon",
                "return_last_iterate", "return_last_sample", "phase_bits",
                "threads", "dual"});
    auto& g = cfg.optimizer;
    g.beta0 = get_num(o, "beta0", g.beta0);
    g.rho = get_num(o, "rho", g.rho);
    g.j_max = get_int(o, "j_max", g.j_max);
    g.inner.tau = get_num(o, "tau", g.inner.tau);
    g.inner.max_iters = get_int(o, "i_max", g.inner.max_iters);
    g.inner.epsilon = get_num(o, "epsilon", g.inner.epsilon);
    g.inner.return_last = get_bool(o, "return_last_iterate", g.inner.return_last);
    g.return_last_sample = get_bool(o, "return_last_sample", g.return_last_sample);
    g.threads = get_int(o, "threads", g.threads);
    cfg.phase_bits = get_int(o, "phase_bits", cfg.phase_bits);
    if (cfg.phase_bits < 0) {
      throw std::invalid_argument("config: optimizer.phase_bits must be >= 0");
    }
    if (o.contains("dual")) {
      const auto& d = o.at("dual");
      check_keys(d, "optimizer.dual",
                 {"max_iters", "step_scale", "tol", "patience", "polish"});
      auto& ds = g.inner.dual;
      ds.max_iters = get_int(d, "max_iters", ds.max_iters);
      ds.step_scale = get_num(d, "step_scale", ds.step_scale);
      ds.tol = get_num(d, "tol", ds.tol);
      ds.patience = get_int(d, "patience", ds.patience);
      ds.polish = get_bool(d, "polish", ds.polish);
    }
    if (!(g.beta0 > 0.0) || !(g.rho > 0.0) || g.rho > 1.0) {
      throw std::invalid_argument(
          "config: optimizer needs beta0 > 0 and rho in (0, 1]");
    }
    if (g.j_max < 0 || g.inner.max_iters < 0) {
      throw std::invalid_argument("config: iteration caps must be >= 0");
    }
  }

  if (j.contains("run")) {
    const auto& r = j.at("run");
    check_keys(r, "run",
               {"rounds", "learning_rate", "batch_size", "trajectories",
                "seed", "policy"});
    cfg.rounds = get_int(r, "rounds", cfg.rounds);
    cfg.learning_rate = get_num(r, "learning_rate", cfg.learning_rate);
    cfg.batch_size = get_int(r, "batch_size", cfg.batch_size);
    cfg.trajectories = get_int(r, "trajectories", cfg.trajectories);
    if (r.contains("seed")) {
      cfg.seed = r.at("seed").get<std::uint64_t>();
    }
    const std::string policy = get_str(r, "policy", "optimized");
    if (policy == "optimized") {
      cfg.policy = PolicyKind::kOptimized;
    } else if (policy == "error_free") {
      cfg.policy = PolicyKind::kErrorFree;
    } else if (policy == "select_all_no_ris") {
      cfg.policy = PolicyKind::kSelectAllNoRis;
    } else if (policy == "random_phases") {
      cfg.policy = PolicyKind::kRandomPhases;
    } else {
      throw std::invalid_argument(
          "config: run.policy must be one of 'optimized', 'error_free', "
          "'select_all_no_ris', 'random_phases'");
    }
    if (cfg.rounds < 1 || cfg.trajectories < 1) {
      throw std::invalid_argument(
          "config: run.rounds and run.trajectories must be >= 1");
    }
    if (cfg.learning_rate < 0.0 || cfg.batch_size < 0) {
      throw std::invalid_argument(
          "config: run.learning_rate and run.batch_size must be >= 0");
    }
  }

  if (j.contains("output")) {
    const auto& o = j.at("output");
    check_keys(o, "output", {"dir"});
    cfg.out_dir = get_str(o, "dir", cfg.out_dir);
  }

  return cfg;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("config: cannot open '" + path + "'");
  }
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::runtime_error("config: parse error in '" + path +
                             "': " + e.what());
  }
  return from_json(j);
}

json ExperimentConfig::to_json() const {
  json j;
  j["system"] = {
      {"num_antennas", params.num_antennas},
      {"num_ris_elements", params.num_ris_elements},
      {"num_devices", params.num_devices},
      {"max_power_db", linear_to_db(params.max_power)},
      {"noise_power_db", linear_to_db(params.noise_power)},
      {"carrier_freq_hz", params.carrier_freq},
      {"path_loss_exponent", params.path_loss_exponent},
      {"gain_ps_dbi", linear_to_db(params.gain_ps)},
      {"gain_device_dbi", linear_to_db(params.gain_device)},
      {"gain_ris_dbi", linear_to_db(params.gain_ris)},
      {"element_size_x_m", params.element_size_x},
      {"element_size_y_m", params.element_size_y},
  };
  j["geometry"] = {
      {"placement", setting == PlacementSetting::kConcentrated ? "concentrated"
                                                               : "two_cluster"},
      {"ps_position", {ps_position.x(), ps_position.y(), ps_position.z()}},
      {"ris_position", {ris_position.x(), ris_position.y(), ris_position.z()}},
  };
  j["channel"] = {
      {"model", channel_model},
      {"kappa_ris_ps", small_scale.kappa_ris_ps},
      {"kappa_direct", small_scale.kappa_direct},
      {"kappa_device_ris", small_scale.kappa_device_ris},
      {"block_period", block_period},
  };
  j["derived"] = {
      {"wavelength_m", params.wavelength()},
      {"line_of_sight",
       "uniform linear arrays along the y axis; deterministic component built "
       "from steering vectors of the server-to-surface direction"},
  };
  json counts_json;
  switch (counts.mode) {
    case CountsSpec::Mode::kEqual:
      counts_json = {{"mode", "equal"}, {"value", counts.equal_value}};
      break;
    case CountsSpec::Mode::kClustered:
      counts_json = {{"mode", "clustered"},
                     {"high_range", {counts.high_min, counts.high_max}},
                     {"low_range", {counts.low_min, counts.low_max}}};
      break;
    case CountsSpec::Mode::kExplicit:
      counts_json = {{"mode", "explicit"}, {"values", counts.explicit_values}};
      break;
  }
  j["task"] = {
      {"kind", task_kind == TaskKind::kRidge ? "ridge" : "logistic"},
      {"dim", task_dim},
      {"regularizer", task_reg},
      {"counts", counts_json},
  };
  j["optimizer"] = {
      {"beta0", optimizer.beta0},
      {"rho", optimizer.rho},
      {"j_max", optimizer.j_max},
      {"tau", optimizer.inner.tau},
      {"i_max", optimizer.inner.max_iters},
      {"epsilon", optimizer.inner.epsilon},
      {"return_last_iterate", optimizer.inner.return_last},
      {"return_last_sample", optimizer.return_last_sample},
      {"phase_bits", phase_bits},
      {"threads", optimizer.threads},
      {"dual",
       {{"max_iters", optimizer.inner.dual.max_iters},
        {"step_scale", optimizer.inner.dual.step_scale},
        {"tol", optimizer.inner.dual.tol},
        {"patience", optimizer.inner.dual.patience},
        {"polish", optimizer.inner.dual.polish}}},
  };
  const char* policy_name = "optimized";
  if (policy == PolicyKind::kErrorFree) policy_name = "error_free";
  if (policy == PolicyKind::kSelectAllNoRis) policy_name = "select_all_no_ris";
  if (policy == PolicyKind::kRandomPhases) policy_name = "random_phases";
  j["run"] = {
      {"rounds", rounds},
      {"learning_rate", learning_rate},
      {"batch_size", batch_size},
      {"trajectories", trajectories},
      {"seed", seed},
      {"policy", policy_name},
  };
  j["output"] = {{"dir", out_dir}};
  return j;
}

Geometry ExperimentConfig::make_geometry(RngStream& rng) const {
  Geometry geo = place_devices(setting, params, rng);
  geo.ps_position = ps_position;
  geo.ris_position = ris_position;
  return geo;
}

std::vector<double> ExperimentConfig::make_counts(RngStream& rng) const {
  return counts.build(params.num_devices, rng);
}

TrainContext ExperimentConfig::make_context(RngStream& rng) const {
  TrainContext ctx;
  ctx.params = params;
  ctx.geometry = make_geometry(rng);
  ctx.model = small_scale;
  ctx.schedule.block_period = block_period;
  return ctx;
}

}  // namespace airfl
