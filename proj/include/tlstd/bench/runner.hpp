// Copyright 2026 The tlstd Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "tlstd/agents.hpp"
#include "tlstd/bench/config.hpp"
#include "tlstd/bench/csv.hpp"
#include "tlstd/envs.hpp"
#include "tlstd/eval.hpp"
#include "tlstd/features.hpp"
#include "tlstd/version.hpp"

namespace tlstd::bench {

namespace detail {

using Clock = std::chrono::steady_clock;

inline double seconds_between(Clock::time_point a, Clock::time_point b) {
  return std::chrono::duration<double>(b - a).count();
}

inline std::string sanitize(const std::string& raw) {
  std::string out;
  out.reserve(raw.size());
  for (char ch : raw) {
    const bool ok = (ch >= 'a' && ch <= 'z') || (ch >= 'A' && ch <= 'Z') ||
                    (ch >= '0' && ch <= '9') || ch == '_' || ch == '.' ||
                    ch == '=' || ch == '-' || ch == '+';
    out.push_back(ok ? ch : '-');
  }
  return out;
}

inline std::string format_value(double v) {
  if (v == std::floor(v) && std::abs(v) < 1e15) {
    return std::to_string(static_cast<long long>(v));
  }
  std::ostringstream os;
  os << v;
  return os.str();
}

inline void parallel_for(int workers, int n, const std::function<void(int)>& fn) {
  if (workers <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::mutex error_mutex;
  std::exception_ptr first_error;
  auto body = [&] {
    while (true) {
      const int i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> threads;
  const int count = std::min(workers, n);
  threads.reserve(count);
  for (int i = 0; i < count; ++i) threads.emplace_back(body);
  for (auto& t : threads) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Problem assembly

/// Environment, features, evaluation states and ground truth for one config.
struct Problem {
  std::unique_ptr<SyntheticMdp> mdp;
  std::unique_ptr<Environment> env;
  std::unique_ptr<FeatureMap> features;
  std::vector<Vector> eval_states;
  Vector true_values;
  double gamma = 0.99;
  Index dim = 0;
  std::int64_t max_episode_steps = 100000;

  std::unique_ptr<TransitionStream> stream(std::uint64_t seed,
                                           std::int64_t length) const {
    if (mdp) return std::make_unique<MdpStream>(*mdp, seed, length);
    return std::make_unique<EnvStream>(*env, *features, gamma, seed, length,
                                       max_episode_steps);
  }
};

inline std::unique_ptr<FeatureMap> build_features(const FeatureSpec& spec,
                                                  const Vector& lows,
                                                  const Vector& highs) {
  if (spec.kind == "tile_coding") {
    TileCodingConfig cfg;
    cfg.state_lows = lows;
    cfg.state_highs = highs;
    cfg.tiles_per_dim = spec.tiles_per_dim;
    cfg.num_layers = spec.num_layers;
    cfg.offsets_seed = spec.offsets_seed;
    cfg.include_bias = spec.include_bias;
    return std::make_unique<TileCoding>(cfg);
  }
  if (spec.kind == "rbf_grid") {
    RbfGridConfig cfg;
    cfg.state_lows = lows;
    cfg.state_highs = highs;
    cfg.centers_per_dim = spec.centers_per_dim;
    cfg.width_fraction = spec.width_fraction;
    cfg.include_bias = spec.include_bias;
    return std::make_unique<RbfGrid>(cfg);
  }
  throw std::invalid_argument("build_features: unsupported kind " + spec.kind);
}

inline Problem prepare_problem(const ExperimentConfig& cfg) {
  Problem problem;
  const EnvSpec& env = cfg.env;
  problem.gamma = env.gamma;
  problem.max_episode_steps = env.max_episode_steps;

  if (env.kind == "synthetic_mdp" || env.kind == "picard_mdp" ||
      env.kind == "random_walk_mdp") {
    if (env.kind == "synthetic_mdp") {
      problem.mdp = std::make_unique<SyntheticMdp>(make_random_mdp(
          env.n_states, env.feature_dim, env.gamma, env.mdp_lambda, env.mdp_seed));
    } else if (env.kind == "picard_mdp") {
      problem.mdp = std::make_unique<SyntheticMdp>(
          make_picard_mdp(env.n_states, env.gamma, env.picard_p, env.mdp_seed));
    } else {
      if (cfg.features.kind != "tile_coding" || cfg.features.tiles_per_dim.size() != 1) {
        throw std::invalid_argument(
            "random_walk_mdp needs one-dimensional tile_coding features");
      }
      TileCodingConfig tiles;
      tiles.state_lows = Vector::Zero(1);
      tiles.state_highs = Vector::Ones(1);
      tiles.tiles_per_dim = cfg.features.tiles_per_dim;
      tiles.num_layers = cfg.features.num_layers;
      tiles.offsets_seed = cfg.features.offsets_seed;
      tiles.include_bias = cfg.features.include_bias;
      problem.mdp = std::make_unique<SyntheticMdp>(make_random_walk_mdp(
          env.n_states, TileCoding(tiles), env.gamma, env.mdp_lambda, env.p_stay));
    }
    problem.dim = problem.mdp->feature_dim();
    problem.features = std::make_unique<TabularFeatures>(problem.mdp->feature_matrix());
    problem.eval_states.reserve(problem.mdp->num_states());
    for (Index s = 0; s < problem.mdp->num_states(); ++s) {
      problem.eval_states.push_back(Vector::Constant(1, static_cast<double>(s)));
    }
    problem.true_values = problem.mdp->true_values();
    return problem;
  }

  if (env.kind == "mountain_car") {
    problem.env = std::make_unique<MountainCarEnv>(
        env.start == "uniform" ? MountainCarEnv::Start::kUniform
                               : MountainCarEnv::Start::kStandard);
  } else if (env.kind == "pendulum") {
    problem.env = std::make_unique<PendulumEnv>();
  } else {
    throw std::invalid_argument("prepare_problem: unknown env kind " + env.kind);
  }
  problem.features = build_features(cfg.features, problem.env->state_lows(),
                                    problem.env->state_highs());
  problem.dim = problem.features->dim();
  problem.eval_states = uniform_grid(problem.env->state_lows(),
                                     problem.env->state_highs(), cfg.truth.grid);
  RolloutSpec rollout;
  rollout.n_rollouts = cfg.truth.n_rollouts;
  rollout.horizon = cfg.truth.horizon;
  rollout.gamma = env.gamma;
  rollout.seed = cfg.truth.rollout_seed;
  problem.true_values = rollout_values(*problem.env, problem.eval_states, rollout);
  return problem;
}

// ---------------------------------------------------------------------------
// Sweep expansion

struct AgentPoint {
  AgentConfig agent;
  std::string algo;
  std::string tag;    // filename-safe parameter summary
  std::string extra;  // semicolon-separated parameter echo in the CSV
};

inline std::vector<AgentPoint> expand_agents(const std::vector<AgentSweep>& sweeps,
                                             Index dim) {
  std::vector<AgentPoint> points;
  for (const AgentSweep& sweep : sweeps) {
    // Per-algorithm sweepable keys; everything else stays at its default.
    std::vector<std::pair<std::string, std::vector<double>>> axes;
    auto add_axis = [&](const std::string& key, auto const& values) {
      std::vector<double> vals(values.begin(), values.end());
      axes.emplace_back(key, std::move(vals));
    };
    add_axis("lambda", sweep.lambda);
    if (sweep.algorithm == "tlstd") {
      add_axis("r", sweep.rank);
      add_axis("k", sweep.batch_size);
      add_axis("rel_cutoff", sweep.rel_cutoff);
      add_axis("solve_every", sweep.solve_every);
    } else if (sweep.algorithm == "lstd") {
      add_axis("delta_init", sweep.delta_init);
    } else if (sweep.algorithm == "td") {
      add_axis("alpha0", sweep.alpha0);
      add_axis("n0", sweep.n0);
    } else if (sweep.algorithm == "ilstd") {
      add_axis("m", sweep.m);
      add_axis("alpha0", sweep.alpha0);
      add_axis("n0", sweep.n0);
    }

    std::vector<std::size_t> odometer(axes.size(), 0);
    while (true) {
      std::map<std::string, double> values;
      for (std::size_t i = 0; i < axes.size(); ++i) {
        values[axes[i].first] = axes[i].second[odometer[i]];
      }

      AgentPoint point;
      point.algo = sweep.algorithm;
      AgentConfig& agent = point.agent;
      agent.algorithm = sweep.algorithm;
      agent.dim = dim;
      agent.lambda = values["lambda"];
      agent.decay_alpha = sweep.decay_alpha;
      if (sweep.beta_constant) {
        agent.beta = BetaSchedule::constant(sweep.beta_value);
      }
      if (sweep.algorithm == "tlstd") {
        agent.rank = static_cast<Index>(values["r"]);
        const auto k = static_cast<Index>(values["k"]);
        agent.batch_size = k == 0 ? agent.rank : k;  // k = 0 selects k = r
        agent.rel_cutoff = values["rel_cutoff"];
        agent.solve_every = static_cast<int>(values["solve_every"]);
      } else if (sweep.algorithm == "lstd") {
        agent.delta_init = values["delta_init"];
      } else if (sweep.algorithm == "td") {
        agent.alpha0 = values["alpha0"];
        agent.n0 = values["n0"];
      } else if (sweep.algorithm == "ilstd") {
        agent.m = static_cast<int>(values["m"]);
        agent.alpha0 = values["alpha0"];
        agent.n0 = values["n0"];
      }

      // Filename tag from swept keys (rank always included for tlstd).
      std::map<std::string, std::string> key_alias{
          {"rank", "r"}, {"batch_size", "k"}};
      std::string tag;
      auto tag_key = [&](const std::string& cfg_key) {
        const std::string axis = key_alias.count(cfg_key) ? key_alias[cfg_key] : cfg_key;
        if (!values.count(axis)) return;
        if (!tag.empty()) tag += "_";
        tag += axis + "=" + detail::format_value(values[axis]);
      };
      for (const auto& key : sweep.swept) tag_key(key);
      if (sweep.algorithm == "tlstd" && tag.find("r=") == std::string::npos) {
        tag_key("rank");
      }
      point.tag = detail::sanitize(tag);

      std::string extra;
      for (const auto& [key, value] : values) {
        if (key == "lambda") continue;  // dedicated CSV column
        if (!extra.empty()) extra += ";";
        extra += key + "=" + detail::format_value(value);
      }
      if (sweep.algorithm == "tlstd") {
        extra += std::string(extra.empty() ? "" : ";") + "beta=" +
                 (sweep.beta_constant ? detail::format_value(sweep.beta_value)
                                      : std::string("average"));
        if (agent.batch_size != static_cast<Index>(values["k"])) {
          extra += ";k_effective=" + detail::format_value(
                                         static_cast<double>(agent.batch_size));
        }
      }
      if (sweep.algorithm == "td" && sweep.decay_alpha) extra += ";decay=1";
      point.extra = extra;

      points.push_back(std::move(point));

      std::size_t axis = 0;
      for (; axis < axes.size(); ++axis) {
        if (++odometer[axis] < axes[axis].second.size()) break;
        odometer[axis] = 0;
      }
      if (axis == axes.size()) break;
    }
  }
  return points;
}

// ---------------------------------------------------------------------------
// Checkpoints

inline std::vector<std::int64_t> make_schedule(const CheckpointSpec& spec,
                                               std::int64_t samples) {
  if (samples <= 0) return {0};
  std::vector<std::int64_t> schedule;
  if (spec.kind == "explicit") {
    for (std::int64_t at : spec.at) {
      if (at > 0 && at <= samples) schedule.push_back(at);
    }
  } else {
    std::int64_t at = spec.start;
    while (at < samples) {
      schedule.push_back(at);
      at = std::max(at + 1, static_cast<std::int64_t>(
                                std::llround(static_cast<double>(at) * spec.factor)));
    }
  }
  if (schedule.empty() || schedule.back() != samples) schedule.push_back(samples);
  return schedule;
}

// ---------------------------------------------------------------------------
// CSV output

inline const char* kRunHeader = "algo,seed,samples,seconds,rmse,r,lambda,extra";

inline void write_report_csv(const std::string& path, const EvalReport& report) {
  CsvWriter csv(path);
  csv.raw_row(kRunHeader);
  for (const Checkpoint& cp : report.checkpoints) {
    csv.row(report.algorithm, report.seed, cp.samples, cp.seconds, cp.rmse,
            report.rank, report.lambda, report.extra);
  }
}

struct AggregateRow {
  std::int64_t samples = 0;
  double rmse_mean = 0.0;
  double rmse_stderr = 0.0;
  double seconds_mean = 0.0;
  double seconds_stderr = 0.0;
};

inline void write_aggregate_csv(const std::string& path, const ExperimentConfig& cfg,
                                const AgentPoint& point,
                                const std::vector<EvalReport>& runs) {
  CsvWriter csv(path);
  std::ostringstream preset;
  preset << "name=" << cfg.name << " seeds=" << runs.size()
         << " samples=" << cfg.samples
         << (runs.size() < 30 ? " preset=desk-scale" : " preset=full");
  csv.comment(preset.str());
  csv.raw_row("algo,params,samples,rmse_mean,rmse_stderr,seconds_mean,seconds_stderr,"
              "n_seeds,r,lambda");
  if (runs.empty()) return;
  // Time-budgeted runs may stop at different checkpoints; aggregate the
  // common prefix.
  std::size_t n_cp = runs.front().checkpoints.size();
  for (const EvalReport& run : runs) n_cp = std::min(n_cp, run.checkpoints.size());
  const auto n = static_cast<double>(runs.size());
  for (std::size_t c = 0; c < n_cp; ++c) {
    AggregateRow row;
    row.samples = runs.front().checkpoints[c].samples;
    for (const EvalReport& run : runs) {
      row.rmse_mean += run.checkpoints[c].rmse;
      row.seconds_mean += run.checkpoints[c].seconds;
    }
    row.rmse_mean /= n;
    row.seconds_mean /= n;
    if (runs.size() > 1) {
      double var_r = 0.0, var_s = 0.0;
      for (const EvalReport& run : runs) {
        var_r += std::pow(run.checkpoints[c].rmse - row.rmse_mean, 2);
        var_s += std::pow(run.checkpoints[c].seconds - row.seconds_mean, 2);
      }
      row.rmse_stderr = std::sqrt(var_r / (n - 1.0) / n);
      row.seconds_stderr = std::sqrt(var_s / (n - 1.0) / n);
    }
    csv.row(point.algo, point.tag.empty() ? std::string("-") : point.tag, row.samples,
            row.rmse_mean, row.rmse_stderr, row.seconds_mean, row.seconds_stderr,
            runs.size(), point.agent.rank, point.agent.lambda);
  }
}

// ---------------------------------------------------------------------------
// Experiment driver

struct RunOutputs {
  std::vector<std::string> files;
};

namespace detail {

inline std::string run_path(const ExperimentConfig& cfg, const AgentPoint& point,
                            std::uint64_t seed) {
  std::string base = cfg.name + "__" + point.algo;
  if (!point.tag.empty()) base += "__" + point.tag;
  base += "__seed" + std::to_string(seed) + ".csv";
  return (std::filesystem::path(cfg.out) / sanitize(base)).string();
}

inline std::string aggregate_path(const ExperimentConfig& cfg, const AgentPoint& point) {
  std::string base = cfg.name + "__" + point.algo;
  if (!point.tag.empty()) base += "__" + point.tag;
  base += "__agg.csv";
  return (std::filesystem::path(cfg.out) / sanitize(base)).string();
}

inline void refuse_collisions(const std::vector<std::string>& paths, bool force) {
  if (force) return;
  for (const auto& path : paths) {
    if (std::filesystem::exists(path)) {
      throw std::runtime_error("output exists (use --force to overwrite): " + path);
    }
  }
}

inline void write_manifest(const ExperimentConfig& cfg,
                           const std::vector<std::string>& files,
                           const std::string& path) {
  json manifest;
  manifest["name"] = cfg.name;
  manifest["type"] = cfg.type;
  manifest["library_version"] = TLSTD_VERSION;
  manifest["seeds"] = cfg.seeds;
  manifest["outputs"] = files;
  manifest["config"] = cfg.echo;
  std::ofstream out(path);
  out << manifest.dump(2) << '\n';
}

struct TaskResult {
  EvalReport report;
  std::string svd_dump;  // populated for tlstd runs when dump_svd is set
};

/// One learning run: streams in untimed chunks, times only agent updates,
/// records RMSE at each scheduled checkpoint.
inline TaskResult run_learning_task(const ExperimentConfig& cfg, const Problem& problem,
                                    const AgentPoint& point, std::uint64_t seed,
                                    const std::vector<std::int64_t>& schedule) {
  TaskResult result;
  result.report.algorithm = point.algo;
  result.report.seed = seed;
  result.report.rank = point.agent.rank;
  result.report.lambda = point.agent.lambda;
  result.report.extra = point.extra;

  auto agent = make_agent(point.agent);
  auto stream = problem.stream(seed, cfg.samples);
  double seconds = 0.0;
  std::int64_t consumed = 0;
  std::vector<Transition> chunk;
  for (std::int64_t target : schedule) {
    chunk.clear();
    chunk.reserve(static_cast<std::size_t>(target - consumed));
    for (std::int64_t i = consumed; i < target; ++i) {
      auto tr = stream->next();
      if (!tr) break;
      chunk.push_back(std::move(*tr));
    }
    const auto start = Clock::now();
    for (const Transition& tr : chunk) agent->step(tr);
    seconds += seconds_between(start, Clock::now());
    consumed += static_cast<std::int64_t>(chunk.size());

    Checkpoint cp;
    cp.samples = consumed;
    cp.seconds = cfg.record_time ? seconds : 0.0;
    cp.rmse = rmse(agent->weights(), *problem.features, problem.eval_states,
                   problem.true_values);
    result.report.checkpoints.push_back(cp);
  }

  if (cfg.dump_svd && point.algo == "tlstd") {
    std::ostringstream os;
    dynamic_cast<const TlstdAgent&>(*agent).factorization().dump(os);
    result.svd_dump = os.str();
  }
  return result;
}

/// One runtime run against a pre-generated stream. The rate cap advances a
/// logical clock to the arrival time of each sample, so waiting for data is
/// modeled without wasting wall-clock time.
inline TaskResult run_runtime_task(const ExperimentConfig& cfg, const Problem& problem,
                                   const AgentPoint& point, std::uint64_t seed) {
  TaskResult result;
  result.report.algorithm = point.algo;
  result.report.seed = seed;
  result.report.rank = point.agent.rank;
  result.report.lambda = point.agent.lambda;
  result.report.extra = point.extra;

  auto stream = problem.stream(seed, cfg.runtime.max_samples);
  const std::vector<Transition> data = collect(*stream, cfg.runtime.max_samples);

  auto agent = make_agent(point.agent);
  const double budget = cfg.runtime.time_budget_s;
  const double rate = cfg.runtime.rate_cap;
  double logical = 0.0;
  double last_logical = 0.0;
  std::size_t i = 0;
  while (i < data.size() && logical < budget) {
    const std::size_t chunk_end =
        std::min(data.size(), i + static_cast<std::size_t>(cfg.runtime.checkpoint_every));
    if (rate > 0.0) {
      while (i < chunk_end && logical < budget) {
        const double arrival = static_cast<double>(i + 1) / rate;
        if (logical < arrival) logical = arrival;  // idle until the sample exists
        const auto start = Clock::now();
        agent->step(data[i]);
        logical += seconds_between(start, Clock::now());
        ++i;
      }
    } else {
      const auto start = Clock::now();
      for (; i < chunk_end; ++i) agent->step(data[i]);
      logical += seconds_between(start, Clock::now());
    }
    logical = std::max(logical, last_logical + 1e-9);  // keep strictly increasing
    last_logical = logical;

    Checkpoint cp;
    cp.samples = static_cast<std::int64_t>(i);
    cp.seconds = logical;
    cp.rmse = rmse(agent->weights(), *problem.features, problem.eval_states,
                   problem.true_values);
    result.report.checkpoints.push_back(cp);
  }

  if (cfg.dump_svd && point.algo == "tlstd") {
    std::ostringstream os;
    dynamic_cast<const TlstdAgent&>(*agent).factorization().dump(os);
    result.svd_dump = os.str();
  }
  return result;
}

}  // namespace detail

inline RunOutputs run_learning_or_runtime(const ExperimentConfig& cfg) {
  const bool runtime = cfg.type == "runtime";
  const Problem problem = prepare_problem(cfg);
  const std::vector<AgentPoint> points = expand_agents(cfg.agents, problem.dim);
  const std::vector<std::int64_t> schedule =
      make_schedule(cfg.checkpoints, cfg.samples);

  std::filesystem::create_directories(cfg.out);
  std::vector<std::string> planned;
  for (const AgentPoint& point : points) {
    for (std::uint64_t seed : cfg.seeds) {
      planned.push_back(detail::run_path(cfg, point, seed));
    }
    planned.push_back(detail::aggregate_path(cfg, point));
  }
  const std::string manifest_path =
      (std::filesystem::path(cfg.out) / detail::sanitize(cfg.name + "__manifest.json"))
          .string();
  planned.push_back(manifest_path);
  detail::refuse_collisions(planned, cfg.force);

  // Timing-sensitive runs execute serially to avoid interference.
  int workers = cfg.workers > 0 ? cfg.workers
                                : static_cast<int>(std::thread::hardware_concurrency());
  if (runtime || cfg.record_time) workers = 1;

  struct Task {
    std::size_t point_idx;
    std::uint64_t seed;
  };
  std::vector<Task> tasks;
  for (std::size_t p = 0; p < points.size(); ++p) {
    for (std::uint64_t seed : cfg.seeds) tasks.push_back({p, seed});
  }
  std::vector<detail::TaskResult> results(tasks.size());
  detail::parallel_for(workers, static_cast<int>(tasks.size()), [&](int idx) {
    const Task& task = tasks[static_cast<std::size_t>(idx)];
    results[static_cast<std::size_t>(idx)] =
        runtime ? detail::run_runtime_task(cfg, problem, points[task.point_idx],
                                           task.seed)
                : detail::run_learning_task(cfg, problem, points[task.point_idx],
                                            task.seed, schedule);
  });

  RunOutputs outputs;
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    const std::string path = detail::run_path(cfg, points[tasks[t].point_idx],
                                              tasks[t].seed);
    write_report_csv(path, results[t].report);
    outputs.files.push_back(path);
    if (!results[t].svd_dump.empty()) {
      std::ofstream dump(path + ".svd");
      dump << results[t].svd_dump;
      outputs.files.push_back(path + ".svd");
    }
  }
  for (std::size_t p = 0; p < points.size(); ++p) {
    std::vector<EvalReport> runs;
    for (std::size_t t = 0; t < tasks.size(); ++t) {
      if (tasks[t].point_idx == p) runs.push_back(results[t].report);
    }
    const std::string path = detail::aggregate_path(cfg, points[p]);
    write_aggregate_csv(path, cfg, points[p], runs);
    outputs.files.push_back(path);
  }
  detail::write_manifest(cfg, outputs.files, manifest_path);
  outputs.files.push_back(manifest_path);
  return outputs;
}

/// Accumulates the dense average system across episodes for each feature
/// configuration, then reports the sorted spectrum and its 95%-mass counts.
inline RunOutputs run_spectrum_analysis(const ExperimentConfig& cfg) {
  std::filesystem::create_directories(cfg.out);
  const std::string values_path =
      (std::filesystem::path(cfg.out) / detail::sanitize(cfg.name + "__spectrum_values.csv"))
          .string();
  const std::string counts_path =
      (std::filesystem::path(cfg.out) / detail::sanitize(cfg.name + "__spectrum_counts.csv"))
          .string();
  const std::string manifest_path =
      (std::filesystem::path(cfg.out) / detail::sanitize(cfg.name + "__manifest.json"))
          .string();
  detail::refuse_collisions({values_path, counts_path, manifest_path}, cfg.force);

  std::unique_ptr<Environment> env;
  if (cfg.env.kind == "mountain_car") {
    env = std::make_unique<MountainCarEnv>(cfg.env.start == "uniform"
                                               ? MountainCarEnv::Start::kUniform
                                               : MountainCarEnv::Start::kStandard);
  } else if (cfg.env.kind == "pendulum") {
    env = std::make_unique<PendulumEnv>();
  } else {
    throw std::invalid_argument("spectrum analysis needs a simulated environment");
  }

  CsvWriter values_csv(values_path);
  values_csv.raw_row("point,index,sigma");
  CsvWriter counts_csv(counts_path);
  counts_csv.raw_row("point,dim,count");

  for (const FeatureSpec& spec : cfg.spectrum.sweep) {
    const auto features = build_features(spec, env->state_lows(), env->state_highs());
    const Index d = features->dim();
    if (d > 4096) {
      throw std::invalid_argument(
          "spectrum analysis refuses d > 4096 (dense SVD); reduce layers or grid "
          "resolution");
    }
    std::string label = spec.kind;
    if (spec.kind == "tile_coding") {
      label += "_layers=" + std::to_string(spec.num_layers);
    } else {
      label += "_width=" + detail::format_value(spec.width_fraction);
    }

    Matrix a_sum = Matrix::Zero(d, d);
    std::int64_t count = 0;
    int episodes_done = 0;
    EnvStream stream(*env, *features, cfg.env.gamma, cfg.seeds.front(),
                     std::numeric_limits<std::int64_t>::max(),
                     cfg.env.max_episode_steps);
    EligibilityTrace trace(d, cfg.spectrum.lambda);
    while (episodes_done < cfg.spectrum.episodes) {
      const auto tr = stream.next();
      if (!tr) break;
      const Vector& z = trace.advance(*tr);
      Vector diff = Vector::Zero(d);
      tr->x.add_to(diff, 1.0);
      tr->x_next.add_to(diff, -tr->continue_discount);
      a_sum.noalias() += z * diff.transpose();
      ++count;
      if (tr->continue_discount == 0.0) ++episodes_done;
    }
    a_sum /= static_cast<double>(count);

    Eigen::BDCSVD<Matrix> svd(a_sum);
    const Vector& sigma = svd.singularValues();
    for (Index i = 0; i < sigma.size(); ++i) {
      values_csv.row(label, i, sigma(i));
    }
    counts_csv.row(label, d, spectrum_count(sigma, cfg.spectrum.mass_fraction));
  }

  RunOutputs outputs;
  outputs.files = {values_path, counts_path};
  detail::write_manifest(cfg, outputs.files, manifest_path);
  outputs.files.push_back(manifest_path);
  return outputs;
}

inline RunOutputs run(const ExperimentConfig& cfg) {
  if (cfg.type == "spectrum") return run_spectrum_analysis(cfg);
  return run_learning_or_runtime(cfg);
}

}  // namespace tlstd::bench
