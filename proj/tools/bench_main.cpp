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

#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tlstd/bench/config.hpp"
#include "tlstd/bench/runner.hpp"
#include "tlstd/version.hpp"

int main(int argc, char** argv) {
  CLI::App app{"tlstd experiment harness"};
  app.set_version_flag("--version", std::string(TLSTD_VERSION));

  std::string config_path;
  std::vector<std::uint64_t> seeds;
  std::string out_dir;
  bool force = false;
  int workers = -1;
  bool dump_svd = false;
  double rate_cap = -1.0;

  CLI::App* run_cmd = app.add_subcommand("run", "run the experiment in a config file");
  run_cmd->add_option("config", config_path, "JSON experiment config")
      ->required()
      ->check(CLI::ExistingFile);
  run_cmd->add_option("--seeds", seeds, "override the seed list")->delimiter(',');
  run_cmd->add_option("--out", out_dir, "override the output directory");
  run_cmd->add_flag("--force", force, "overwrite existing output files");
  run_cmd->add_option("--workers", workers, "worker threads (default: cores)");
  run_cmd->add_flag("--dump-svd", dump_svd,
                    "dump the final factorization of each tlstd run");
  run_cmd->add_option("--rate-cap", rate_cap,
                      "restrict runtime streams to this many samples/second");
  app.require_subcommand(1);

  CLI11_PARSE(app, argc, argv);

  try {
    std::ifstream in(config_path);
    tlstd::bench::json doc = tlstd::bench::json::parse(in);
    tlstd::bench::ExperimentConfig cfg = tlstd::bench::parse_config(doc);
    if (!seeds.empty()) cfg.seeds = seeds;
    if (!out_dir.empty()) cfg.out = out_dir;
    if (force) cfg.force = true;
    if (workers >= 0) cfg.workers = workers;
    if (dump_svd) cfg.dump_svd = true;
    if (rate_cap >= 0.0) cfg.runtime.rate_cap = rate_cap;

    const tlstd::bench::RunOutputs outputs = tlstd::bench::run(cfg);
    for (const std::string& file : outputs.files) {
      std::cout << file << '\n';
    }
    return 0;
  } catch (const tlstd::bench::ValidationError& err) {
    std::cerr << err.what() << '\n';
    return 2;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return 1;
  }
}
