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

#include <cstdint>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "tlstd/linalg.hpp"

namespace tlstd::bench {

using json = nlohmann::json;

/// Carries every failing field so a bad config is diagnosed in one pass.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(std::vector<std::string> fields)
      : std::runtime_error(join(fields)), fields_(std::move(fields)) {}

  const std::vector<std::string>& fields() const { return fields_; }

 private:
  static std::string join(const std::vector<std::string>& fields) {
    std::string msg = "invalid config:";
    for (const auto& f : fields) msg += "\n  - " + f;
    return msg;
  }
  std::vector<std::string> fields_;
};

struct EnvSpec {
  std::string kind = "mountain_car";  // mountain_car | pendulum | synthetic_mdp
                                      // | random_walk_mdp | picard_mdp
  double gamma = 0.99;
  std::string start = "standard";     // mountain_car: standard | uniform
  std::int64_t max_episode_steps = 100000;
  Index n_states = 5;
  Index feature_dim = 5;              // synthetic_mdp
  double mdp_lambda = 0.0;            // lambda baked into the closed form
  std::uint64_t mdp_seed = 1;
  double p_stay = 0.2;                // random_walk_mdp
  double picard_p = 2.0;              // picard_mdp
};

struct FeatureSpec {
  std::string kind = "tabular";  // tile_coding | rbf_grid | tabular
  std::vector<int> tiles_per_dim;
  int num_layers = 1;
  std::uint64_t offsets_seed = 0;
  std::vector<int> centers_per_dim;
  double width_fraction = 0.12;
  bool include_bias = false;
};

/// One agent entry of the config; list-valued parameters form the sweep grid.
struct AgentSweep {
  std::string algorithm;
  std::vector<Index> rank{0};
  std::vector<Index> batch_size{1};  // 0 selects k = r
  std::vector<double> lambda{0.0};
  std::vector<double> alpha0{0.1};
  std::vector<double> n0{1000.0};
  std::vector<int> m{1};
  std::vector<double> rel_cutoff{0.01};
  std::vector<double> delta_init{1e-3};
  std::vector<int> solve_every{1};
  bool decay_alpha = false;
  bool beta_constant = false;
  double beta_value = 0.0;
  std::set<std::string> swept;  // keys given as arrays
};

struct CheckpointSpec {
  std::string kind = "geometric";  // geometric | explicit
  std::int64_t start = 100;
  double factor = 1.5;
  std::vector<std::int64_t> at;
};

struct TruthSpec {
  std::string kind = "closed_form";  // closed_form | rollout
  std::vector<int> grid{20, 20};
  int n_rollouts = 1;
  int horizon = 2000;
  std::uint64_t rollout_seed = 424242;
};

struct RuntimeSpec {
  double time_budget_s = 5.0;
  std::int64_t max_samples = 4000;
  double rate_cap = 0.0;  // samples per second; 0 means uncapped
  std::int64_t checkpoint_every = 100;
};

struct SpectrumSpec {
  int episodes = 500;
  double mass_fraction = 0.95;
  double lambda = 0.0;
  std::vector<FeatureSpec> sweep;
};

struct ExperimentConfig {
  std::string name = "experiment";
  std::string type = "learning";  // learning | runtime | spectrum
  EnvSpec env;
  FeatureSpec features;
  std::vector<AgentSweep> agents;
  std::int64_t samples = 10000;
  CheckpointSpec checkpoints;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  TruthSpec truth;
  bool record_time = false;
  std::string out = "results";
  RuntimeSpec runtime;
  SpectrumSpec spectrum;
  int workers = 0;  // 0 picks the available core count
  bool force = false;
  bool dump_svd = false;
  json echo;  // raw config, persisted into the run manifest
};

namespace detail {

template <typename T>
inline std::vector<T> scalar_or_list(const json& node, const std::string& key,
                                     std::vector<T> fallback, AgentSweep* sweep) {
  if (!node.contains(key)) return fallback;
  if (node[key].is_array()) {
    if (sweep) sweep->swept.insert(key);
    return node[key].get<std::vector<T>>();
  }
  return {node[key].get<T>()};
}

inline FeatureSpec parse_features(const json& node, const std::string& path,
                                  std::vector<std::string>& errors) {
  FeatureSpec spec;
  spec.kind = node.value("kind", spec.kind);
  if (spec.kind != "tile_coding" && spec.kind != "rbf_grid" && spec.kind != "tabular") {
    errors.push_back(path + ".kind: unknown feature kind '" + spec.kind + "'");
  }
  spec.tiles_per_dim = node.value("tiles_per_dim", spec.tiles_per_dim);
  spec.num_layers = node.value("num_layers", spec.num_layers);
  spec.offsets_seed = node.value("offsets_seed", spec.offsets_seed);
  spec.centers_per_dim = node.value("centers_per_dim", spec.centers_per_dim);
  spec.width_fraction = node.value("width_fraction", spec.width_fraction);
  spec.include_bias = node.value("include_bias", spec.include_bias);
  if (spec.kind == "tile_coding") {
    if (spec.tiles_per_dim.empty()) errors.push_back(path + ".tiles_per_dim: required");
    if (spec.num_layers < 1) errors.push_back(path + ".num_layers: must be >= 1");
  }
  if (spec.kind == "rbf_grid") {
    if (spec.centers_per_dim.empty())
      errors.push_back(path + ".centers_per_dim: required");
    if (spec.width_fraction <= 0.0)
      errors.push_back(path + ".width_fraction: must be positive");
  }
  return spec;
}

}  // namespace detail

/// Parses and validates a config document; throws ValidationError listing
/// every failing field.
inline ExperimentConfig parse_config(const json& doc) {
  std::vector<std::string> errors;
  ExperimentConfig cfg;
  cfg.echo = doc;

  cfg.name = doc.value("name", cfg.name);
  cfg.type = doc.value("type", cfg.type);
  if (cfg.type != "learning" && cfg.type != "runtime" && cfg.type != "spectrum") {
    errors.push_back("type: must be learning, runtime, or spectrum");
  }
  cfg.samples = doc.value("samples", cfg.samples);
  if (cfg.samples < 0) errors.push_back("samples: must be nonnegative");
  cfg.record_time = doc.value("record_time", cfg.record_time);
  cfg.out = doc.value("out", cfg.out);
  cfg.workers = doc.value("workers", cfg.workers);
  cfg.force = doc.value("force", cfg.force);
  cfg.dump_svd = doc.value("dump_svd", cfg.dump_svd);

  if (doc.contains("seeds")) {
    cfg.seeds = doc["seeds"].get<std::vector<std::uint64_t>>();
  }
  if (cfg.seeds.empty()) errors.push_back("seeds: need at least one seed");

  if (doc.contains("env")) {
    const json& env = doc["env"];
    cfg.env.kind = env.value("kind", cfg.env.kind);
    cfg.env.gamma = env.value("gamma", cfg.env.gamma);
    cfg.env.start = env.value("start", cfg.env.start);
    cfg.env.max_episode_steps = env.value("max_episode_steps", cfg.env.max_episode_steps);
    cfg.env.n_states = env.value("n_states", cfg.env.n_states);
    cfg.env.feature_dim = env.value("feature_dim", cfg.env.feature_dim);
    cfg.env.mdp_lambda = env.value("lambda", cfg.env.mdp_lambda);
    cfg.env.mdp_seed = env.value("mdp_seed", cfg.env.mdp_seed);
    cfg.env.p_stay = env.value("p_stay", cfg.env.p_stay);
    cfg.env.picard_p = env.value("p", cfg.env.picard_p);
  }
  const std::set<std::string> env_kinds{"mountain_car", "pendulum", "synthetic_mdp",
                                        "random_walk_mdp", "picard_mdp"};
  if (!env_kinds.contains(cfg.env.kind)) {
    errors.push_back("env.kind: unknown environment '" + cfg.env.kind + "'");
  }
  if (cfg.env.gamma < 0.0 || cfg.env.gamma > 1.0) {
    errors.push_back("env.gamma: must be in [0, 1]");
  }
  if (cfg.env.kind == "mountain_car" && cfg.env.start != "standard" &&
      cfg.env.start != "uniform") {
    errors.push_back("env.start: must be standard or uniform");
  }
  if (cfg.env.n_states < 1) errors.push_back("env.n_states: must be >= 1");

  if (doc.contains("features")) {
    cfg.features = detail::parse_features(doc["features"], "features", errors);
  } else if (cfg.env.kind == "mountain_car" || cfg.env.kind == "pendulum") {
    errors.push_back("features: required for continuous-state environments");
  }

  if (doc.contains("agents")) {
    for (std::size_t i = 0; i < doc["agents"].size(); ++i) {
      const json& node = doc["agents"][i];
      const std::string path = "agents[" + std::to_string(i) + "]";
      AgentSweep sweep;
      sweep.algorithm = node.value("algorithm", std::string{});
      if (sweep.algorithm != "tlstd" && sweep.algorithm != "lstd" &&
          sweep.algorithm != "td" && sweep.algorithm != "ilstd") {
        errors.push_back(path + ".algorithm: unknown algorithm '" + sweep.algorithm +
                         "'");
      }
      sweep.rank = detail::scalar_or_list<Index>(node, "rank", sweep.rank, &sweep);
      sweep.batch_size =
          detail::scalar_or_list<Index>(node, "batch_size", sweep.batch_size, &sweep);
      sweep.lambda =
          detail::scalar_or_list<double>(node, "lambda", sweep.lambda, &sweep);
      sweep.alpha0 =
          detail::scalar_or_list<double>(node, "alpha0", sweep.alpha0, &sweep);
      sweep.n0 = detail::scalar_or_list<double>(node, "n0", sweep.n0, &sweep);
      sweep.m = detail::scalar_or_list<int>(node, "m", sweep.m, &sweep);
      sweep.rel_cutoff =
          detail::scalar_or_list<double>(node, "rel_cutoff", sweep.rel_cutoff, &sweep);
      sweep.delta_init =
          detail::scalar_or_list<double>(node, "delta_init", sweep.delta_init, &sweep);
      sweep.solve_every =
          detail::scalar_or_list<int>(node, "solve_every", sweep.solve_every, &sweep);
      sweep.decay_alpha = node.value("decay_alpha", sweep.decay_alpha);
      if (node.contains("beta")) {
        if (node["beta"].is_number()) {
          sweep.beta_constant = true;
          sweep.beta_value = node["beta"].get<double>();
          if (sweep.beta_value <= 0.0 || sweep.beta_value >= 1.0) {
            errors.push_back(path + ".beta: constant beta must be in (0, 1)");
          }
        } else if (node["beta"].get<std::string>() != "average") {
          errors.push_back(path + ".beta: must be 'average' or a number in (0, 1)");
        }
      }
      if (sweep.algorithm == "tlstd") {
        for (Index r : sweep.rank) {
          if (r < 1) errors.push_back(path + ".rank: every rank must be >= 1");
        }
      }
      for (double a : sweep.alpha0) {
        if (a <= 0.0) errors.push_back(path + ".alpha0: must be positive");
      }
      for (int mm : sweep.m) {
        if (mm < 1) errors.push_back(path + ".m: must be >= 1");
      }
      for (double dd : sweep.delta_init) {
        if (dd <= 0.0) errors.push_back(path + ".delta_init: must be positive");
      }
      cfg.agents.push_back(std::move(sweep));
    }
  }
  if (cfg.agents.empty() && cfg.type != "spectrum") {
    errors.push_back("agents: need at least one agent spec");
  }

  if (doc.contains("checkpoints")) {
    const json& node = doc["checkpoints"];
    cfg.checkpoints.kind = node.value("kind", cfg.checkpoints.kind);
    cfg.checkpoints.start = node.value("start", cfg.checkpoints.start);
    cfg.checkpoints.factor = node.value("factor", cfg.checkpoints.factor);
    if (node.contains("at")) {
      cfg.checkpoints.at = node["at"].get<std::vector<std::int64_t>>();
    }
    if (cfg.checkpoints.kind == "geometric") {
      if (cfg.checkpoints.start < 1) errors.push_back("checkpoints.start: must be >= 1");
      if (cfg.checkpoints.factor <= 1.0) {
        errors.push_back("checkpoints.factor: must be > 1");
      }
    } else if (cfg.checkpoints.kind == "explicit") {
      for (std::size_t i = 1; i < cfg.checkpoints.at.size(); ++i) {
        if (cfg.checkpoints.at[i] <= cfg.checkpoints.at[i - 1]) {
          errors.push_back("checkpoints.at: must be strictly increasing");
          break;
        }
      }
    } else {
      errors.push_back("checkpoints.kind: must be geometric or explicit");
    }
  }

  if (doc.contains("truth")) {
    const json& node = doc["truth"];
    cfg.truth.kind = node.value("kind", cfg.truth.kind);
    if (cfg.truth.kind != "closed_form" && cfg.truth.kind != "rollout") {
      errors.push_back("truth.kind: must be closed_form or rollout");
    }
    cfg.truth.grid = node.value("grid", cfg.truth.grid);
    cfg.truth.n_rollouts = node.value("n_rollouts", cfg.truth.n_rollouts);
    cfg.truth.horizon = node.value("horizon", cfg.truth.horizon);
    cfg.truth.rollout_seed = node.value("rollout_seed", cfg.truth.rollout_seed);
  } else if (cfg.env.kind == "mountain_car" || cfg.env.kind == "pendulum") {
    cfg.truth.kind = "rollout";
  }
  if (cfg.truth.kind == "closed_form" &&
      (cfg.env.kind == "mountain_car" || cfg.env.kind == "pendulum")) {
    errors.push_back("truth.kind: closed_form needs a synthetic MDP environment");
  }

  if (doc.contains("runtime")) {
    const json& node = doc["runtime"];
    cfg.runtime.time_budget_s = node.value("time_budget_s", cfg.runtime.time_budget_s);
    cfg.runtime.max_samples = node.value("max_samples", cfg.runtime.max_samples);
    cfg.runtime.rate_cap = node.value("rate_cap", cfg.runtime.rate_cap);
    cfg.runtime.checkpoint_every =
        node.value("checkpoint_every", cfg.runtime.checkpoint_every);
    if (cfg.runtime.time_budget_s < 0.0) {
      errors.push_back("runtime.time_budget_s: must be nonnegative");
    }
    if (cfg.runtime.checkpoint_every < 1) {
      errors.push_back("runtime.checkpoint_every: must be >= 1");
    }
  } else if (cfg.type == "runtime") {
    errors.push_back("runtime: required for runtime experiments");
  }

  if (doc.contains("spectrum")) {
    const json& node = doc["spectrum"];
    cfg.spectrum.episodes = node.value("episodes", cfg.spectrum.episodes);
    cfg.spectrum.mass_fraction = node.value("mass_fraction", cfg.spectrum.mass_fraction);
    cfg.spectrum.lambda = node.value("lambda", cfg.spectrum.lambda);
    if (node.contains("sweep")) {
      for (std::size_t i = 0; i < node["sweep"].size(); ++i) {
        cfg.spectrum.sweep.push_back(detail::parse_features(
            node["sweep"][i], "spectrum.sweep[" + std::to_string(i) + "]", errors));
      }
    }
    if (cfg.spectrum.episodes < 1) errors.push_back("spectrum.episodes: must be >= 1");
  } else if (cfg.type == "spectrum") {
    errors.push_back("spectrum: required for spectrum experiments");
  }
  if (cfg.type == "spectrum" && cfg.spectrum.sweep.empty() &&
      doc.contains("spectrum")) {
    errors.push_back("spectrum.sweep: need at least one feature configuration");
  }

  if (!errors.empty()) throw ValidationError(std::move(errors));
  return cfg;
}

}  // namespace tlstd::bench
