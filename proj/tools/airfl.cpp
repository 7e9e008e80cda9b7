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
#include "airfl/flsim.hpp"
#include "airfl/validation.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace {

using airfl::ExperimentConfig;
using nlohmann::json;

// Fixed stream ids so every subcommand derives the same randomness layout
// from one master seed.
constexpr std::uint64_t kStreamGeometry = 1;
constexpr std::uint64_t kStreamCounts = 2;
constexpr std::uint64_t kStreamTask = 3;
constexpr std::uint64_t kStreamChannel = 4;
constexpr std::uint64_t kStreamOptimizer = 5;
constexpr std::uint64_t kStreamTrain = 6;

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

void write_text(const std::filesystem::path& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << body;
}

void write_json(const std::filesystem::path& path, const json& j) {
  write_text(path, j.dump(2) + "\n");
}

std::filesystem::path prepare_out_dir(const ExperimentConfig& cfg) {
  const std::filesystem::path dir(cfg.out_dir);
  std::filesystem::create_directories(dir);
  return dir;
}

// Everything an experiment subcommand needs, built deterministically from
// the config alone.
struct Experiment {
  airfl::TrainContext ctx;
  std::vector<double> counts;
  airfl::ChannelRealization channel;
};

Experiment build_experiment(const ExperimentConfig& cfg) {
  Experiment e;
  airfl::RngStream geo_rng(cfg.seed, kStreamGeometry);
  e.ctx = cfg.make_context(geo_rng);
  airfl::RngStream count_rng(cfg.seed, kStreamCounts);
  e.counts = cfg.make_counts(count_rng);
  airfl::RngStream chan_rng(cfg.seed, kStreamChannel);
  e.channel = airfl::draw_channels(e.ctx.geometry, e.ctx.params, e.ctx.model, chan_rng);
  return e;
}

std::string gibbs_log_csv(const std::vector<airfl::GibbsLogRow>& log) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "iter,beta,mask,j_sampled,j_best\n";
  for (const auto& row : log)
    os << row.iter << ',' << row.beta << ',' << row.mask_key << ',' << row.j_sampled << ','
       << row.j_best << '\n';
  return os.str();
}

int run_optimize(const ExperimentConfig& cfg) {
  const auto dir = prepare_out_dir(cfg);
  const Experiment e = build_experiment(cfg);

  airfl::RngStream opt_rng(cfg.seed, kStreamOptimizer);
  const airfl::GibbsResult res =
      airfl::gibbs_optimize(e.channel, e.counts, e.ctx.params, cfg.optimizer, opt_rng);

  airfl::RisPhase theta = res.theta;
  double d = res.j_value;
  if (cfg.phase_bits > 0) {
    theta = airfl::project_phases(theta, cfg.phase_bits);
    d = airfl::d_value(res.mask, res.f, theta, e.channel, e.counts, e.ctx.params);
  }

  write_text(dir / "optimize_log.csv", gibbs_log_csv(res.log));
  json summary;
  summary["config"] = cfg.to_json();
  summary["generated_at"] = utc_timestamp();
  summary["selection"] = res.mask.key();
  summary["selected_devices"] = res.mask.count();
  summary["d_value"] = d;
  summary["d_value_continuous"] = res.j_value;
  summary["iterations"] = static_cast<int>(res.log.size());
  write_json(dir / "optimize_summary.json", summary);
  std::cout << "optimize: d = " << d << ", selected " << res.mask.count() << "/"
            << res.mask.size() << ", outputs in " << dir.string() << "\n";
  return 0;
}

int run_train(const ExperimentConfig& cfg) {
  const auto dir = prepare_out_dir(cfg);
  const Experiment e = build_experiment(cfg);

  airfl::RngStream task_rng(cfg.seed, kStreamTask);
  const airfl::FlTask task =
      airfl::make_task(cfg.task_kind, cfg.task_dim, e.counts, task_rng, cfg.task_reg);

  airfl::PolicySource src;
  src.kind = cfg.policy;
  src.optimizer = cfg.optimizer;
  src.beamformer_only = cfg.optimizer.inner;
  src.phase_bits = cfg.phase_bits;
  if (cfg.policy == airfl::PolicyKind::kOptimized) {
    airfl::RngStream opt_rng(cfg.seed, kStreamOptimizer);
    src.solution =
        airfl::gibbs_optimize(e.channel, e.counts, e.ctx.params, cfg.optimizer, opt_rng);
  }

  airfl::TrainConfig tc;
  tc.rounds = cfg.rounds;
  tc.learning_rate = cfg.learning_rate;
  tc.batch_size = cfg.batch_size;

  airfl::RngStream base(cfg.seed, kStreamTrain);
  airfl::VecR final_gaps(cfg.trajectories);
  double d_first = 0.0;
  int selected_first = task.num_devices();
  for (int k = 0; k < cfg.trajectories; ++k) {
    airfl::RngStream rng = base.split(static_cast<std::uint64_t>(k));
    const airfl::TrainingTrace trace =
        airfl::run_training(task, src, e.ctx, tc, rng, e.channel);
    std::ostringstream body;
    trace.write_csv(body);
    write_text(dir / ("train_trace_" + std::to_string(k) + ".csv"), body.str());
    final_gaps(k) = trace.gap(cfg.rounds - 1);
    if (k == 0) {
      d_first = trace.d_value(0);
      selected_first = trace.selected.front();
    }
  }

  json summary;
  summary["config"] = cfg.to_json();
  summary["generated_at"] = utc_timestamp();
  summary["task"] = {{"mu", task.constants.mu},
                     {"omega", task.constants.omega},
                     {"optimal_loss", task.f_star}};
  summary["d_value"] = d_first;
  summary["selected_devices"] = selected_first;
  summary["final_gap_mean"] = final_gaps.mean();
  summary["final_gap_min"] = final_gaps.minCoeff();
  summary["final_gap_max"] = final_gaps.maxCoeff();
  write_json(dir / "train_summary.json", summary);
  std::cout << "train: mean final gap " << final_gaps.mean() << " over " << cfg.trajectories
            << " trajectories, outputs in " << dir.string() << "\n";
  return 0;
}

json report_common(const ExperimentConfig& cfg) {
  json j;
  j["generated_at"] = utc_timestamp();
  j["seed"] = cfg.seed;
  return j;
}

int finish_suite(const std::string& name, bool pass, const std::filesystem::path& dir,
                 const json& report, const std::string& file) {
  write_json(dir / file, report);
  std::cout << "validate " << name << ": " << (pass ? "pass" : "FAIL") << " (report: "
            << (dir / file).string() << ")\n";
  return pass ? 0 : 2;
}

int run_validate(const ExperimentConfig& cfg, const std::string& suite) {
  const auto dir = prepare_out_dir(cfg);

  if (suite == "lemma2" || suite == "mse") {
    airfl::PolicyCheckOptions o;
    o.seed = cfg.seed;
    if (suite == "mse") {
      o.instances = 10;
      o.grid_points = 0;  // Monte-Carlo agreement only
      o.mc_runs = 20000;
    }
    const airfl::PolicyCheckReport rep = airfl::validate_policy(o);
    json j = report_common(cfg);
    j["options"] = {{"instances", o.instances},
                    {"grid_points", o.grid_points},
                    {"mc_runs", o.mc_runs},
                    {"dim", o.dim}};
    j["mc_vs_analytic_rel_err"] = rep.worst_mc_rel;
    j["grid_excess_rel"] = rep.worst_grid_excess;
    j["alignment_residual"] = rep.worst_alignment;
    j["power_excess_w"] = rep.worst_power_excess;
    j["binding_gap_rel"] = rep.worst_binding_gap;
    j["seconds"] = rep.seconds;
    const bool pass = (suite == "mse") ? rep.mc_ok : rep.pass;
    j["pass"] = pass;
    return finish_suite(suite, pass, dir, j,
                        suite == "mse" ? "mse_report.json" : "lemma2_report.json");
  }

  if (suite == "gibbs-dist") {
    airfl::SamplerCheckOptions o;
    o.seed = cfg.seed;
    const airfl::SamplerCheckReport rep = airfl::validate_sampler(o);
    json j = report_common(cfg);
    j["options"] = {{"draws", o.draws}};
    j["two_point_exact_err"] = rep.two_point_exact_err;
    j["two_point_freq_dev"] = rep.two_point_freq_dev;
    j["multi_freq_dev"] = rep.multi_freq_dev;
    j["infeasible_prob"] = rep.infeasible_prob;
    j["beta_trace_rel_err"] = rep.worst_beta_rel;
    j["seconds"] = rep.seconds;
    j["pass"] = rep.pass;
    return finish_suite(suite, rep.pass, dir, j, "gibbs_dist_report.json");
  }

  if (suite == "sca-oracle") {
    airfl::SolverCheckOptions o;
    o.seed = cfg.seed;
    const airfl::SolverCheckReport rep = airfl::validate_solver(o);
    json j = report_common(cfg);
    j["options"] = {{"instances", o.instances},
                    {"random_samples", o.random_samples},
                    {"dual_instances", o.dual_instances},
                    {"grid_resolution", o.grid_resolution}};
    j["objective_excess"] = rep.worst_excess;
    j["feasibility_residual"] = rep.worst_feasibility;
    j["dual_rel_err"] = rep.worst_dual_rel;
    j["tangency_residual"] = rep.worst_tangency;
    j["attainment_residual"] = rep.worst_attainment;
    j["seconds"] = rep.seconds;
    j["pass"] = rep.pass;
    return finish_suite(suite, rep.pass, dir, j, "sca_oracle_report.json");
  }

  if (suite == "bound") {
    airfl::BoundCheckOptions o;
    o.seed = cfg.seed;
    o.optimizer = cfg.optimizer;
    const airfl::BoundCheckReport rep = airfl::validate_bound(o);
    json j = report_common(cfg);
    j["options"] = {{"dim", o.dim},
                    {"devices", o.devices},
                    {"total_samples", o.total_samples},
                    {"antennas", o.antennas},
                    {"ris_elements", o.ris_elements},
                    {"rounds", o.rounds},
                    {"trajectories", o.trajectories},
                    {"noise_power", o.noise_power}};
    j["d_value"] = rep.d;
    j["psi"] = rep.psi;
    j["mu"] = rep.mu;
    j["omega"] = rep.omega;
    j["alpha1"] = rep.alpha1;
    j["alpha2"] = rep.alpha2;
    j["initial_gap"] = rep.initial_gap;
    j["d_in_steady_state_range"] = rep.d_in_range;
    j["max_violation"] = rep.max_violation;
    j["tail_mean"] = rep.tail_mean;
    j["tail_se"] = rep.tail_se;
    j["asymptote"] = rep.asymptote;
    j["seconds"] = rep.seconds;
    j["pass"] = rep.pass;
    std::ostringstream csv;
    csv << std::setprecision(17);
    csv << "round,empirical_gap,bound\n";
    for (int t = 0; t < rep.mean_gap.size(); ++t)
      csv << (t + 1) << ',' << rep.mean_gap(t) << ',' << rep.bound(t) << '\n';
    write_text(dir / "bound_trace.csv", csv.str());
    return finish_suite(suite, rep.pass, dir, j, "bound_report.json");
  }

  throw CLI::ValidationError("unknown validation suite '" + suite + "'");
}

void apply_sweep_value(ExperimentConfig& cfg, const std::string& param, double value) {
  const int iv = static_cast<int>(value);
  if (param == "L") {
    cfg.params.num_ris_elements = iv;
  } else if (param == "N") {
    cfg.params.num_antennas = iv;
  } else if (param == "M") {
    cfg.params.num_devices = iv;
  } else if (param == "phase_bits") {
    cfg.phase_bits = iv;
  } else if (param == "rounds") {
    cfg.rounds = iv;
  } else if (param == "noise_power_db") {
    cfg.params.noise_power = 1e-3 * airfl::db_to_linear(value);
  } else {
    throw CLI::ValidationError(
        "unsupported sweep parameter '" + param +
        "' (expected L, N, M, phase_bits, rounds, or noise_power_db)");
  }
  cfg.params.validate();
}

int run_sweep(const ExperimentConfig& base_cfg, const std::string& param,
              const std::vector<double>& values) {
  const auto dir = prepare_out_dir(base_cfg);
  std::ostringstream csv;
  csv << std::setprecision(17);
  csv << "param,value,d,final_gap\n";

  json rows = json::array();
  for (double v : values) {
    ExperimentConfig cfg = base_cfg;
    apply_sweep_value(cfg, param, v);
    const Experiment e = build_experiment(cfg);
    airfl::RngStream task_rng(cfg.seed, kStreamTask);
    const airfl::FlTask task =
        airfl::make_task(cfg.task_kind, cfg.task_dim, e.counts, task_rng, cfg.task_reg);

    airfl::PolicySource src;
    src.kind = cfg.policy;
    src.optimizer = cfg.optimizer;
    src.beamformer_only = cfg.optimizer.inner;
    src.phase_bits = cfg.phase_bits;
    if (cfg.policy == airfl::PolicyKind::kOptimized) {
      airfl::RngStream opt_rng(cfg.seed, kStreamOptimizer);
      src.solution =
          airfl::gibbs_optimize(e.channel, e.counts, e.ctx.params, cfg.optimizer, opt_rng);
    }

    airfl::TrainConfig tc;
    tc.rounds = cfg.rounds;
    tc.learning_rate = cfg.learning_rate;
    tc.batch_size = cfg.batch_size;

    airfl::RngStream traj_base(cfg.seed, kStreamTrain);
    double gap_acc = 0.0;
    double d_first = 0.0;
    for (int k = 0; k < cfg.trajectories; ++k) {
      airfl::RngStream rng = traj_base.split(static_cast<std::uint64_t>(k));
      const airfl::TrainingTrace trace =
          airfl::run_training(task, src, e.ctx, tc, rng, e.channel);
      gap_acc += trace.gap(cfg.rounds - 1);
      if (k == 0) d_first = trace.d_value(0);
    }
    const double final_gap = gap_acc / cfg.trajectories;
    csv << param << ',' << v << ',' << d_first << ',' << final_gap << '\n';
    rows.push_back({{"value", v}, {"d", d_first}, {"final_gap", final_gap}});
  }

  write_text(dir / "sweep.csv", csv.str());
  json summary;
  summary["config"] = base_cfg.to_json();
  summary["generated_at"] = utc_timestamp();
  summary["param"] = param;
  summary["rows"] = rows;
  write_json(dir / "sweep_summary.json", summary);
  std::cout << "sweep over " << param << " done, outputs in " << dir.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"over-the-air federated learning simulator and optimizer"};
  app.require_subcommand(1);
  app.fallthrough(true);

  std::string config_path;
  std::uint64_t seed_override = 0;
  std::string out_override;
  int threads = 0;
  app.add_option("--config", config_path, "experiment config file (JSON)");
  auto* seed_opt = app.add_option("--seed", seed_override, "master seed override");
  auto* out_opt = app.add_option("--out", out_override, "output directory override");
  app.add_option("--threads", threads,
                 "worker threads for candidate evaluation (0: AIRFL_THREADS env or 1)");

  auto* cmd_optimize =
      app.add_subcommand("optimize", "device selection and transceiver design on one channel draw");
  auto* cmd_train = app.add_subcommand("train", "federated training over the simulated uplink");
  auto* cmd_validate = app.add_subcommand("validate", "self-check suites");
  std::string suite;
  cmd_validate->add_option("suite", suite, "lemma2 | mse | gibbs-dist | sca-oracle | bound")
      ->required()
      ->check(CLI::IsMember({"lemma2", "mse", "gibbs-dist", "sca-oracle", "bound"}));
  auto* cmd_sweep = app.add_subcommand("sweep", "vary one parameter over a grid");
  std::string sweep_param;
  std::vector<double> sweep_values;
  cmd_sweep->add_option("--param", sweep_param, "parameter to vary")->required();
  cmd_sweep->add_option("--values", sweep_values, "comma-separated values")
      ->required()
      ->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    ExperimentConfig cfg;
    if (!config_path.empty()) cfg = ExperimentConfig::from_file(config_path);
    if (seed_opt->count() > 0) cfg.seed = seed_override;
    if (out_opt->count() > 0) cfg.out_dir = out_override;
    if (threads > 0) cfg.optimizer.threads = threads;

    if (cmd_optimize->parsed()) return run_optimize(cfg);
    if (cmd_train->parsed()) return run_train(cfg);
    if (cmd_validate->parsed()) return run_validate(cfg, suite);
    if (cmd_sweep->parsed()) return run_sweep(cfg, sweep_param, sweep_values);
    return 1;
  } catch (const std::exception& e) {
    json err;
    err["error"] = {{"type", "runtime"}, {"message", e.what()}};
    std::cout << err.dump(2) << "\n";
    return 1;
  }
}
