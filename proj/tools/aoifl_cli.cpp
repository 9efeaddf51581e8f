// Copyright 2026 The aoifl Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "aoifl/runner.hpp"

namespace {

// Priority: --out-dir flag, then the config file, then $AOIFL_OUT_DIR, then "runs".
void resolve_out_dir(aoifl::RunManifest& manifest, const std::string& flag_value) {
  if (!flag_value.empty()) {
    manifest.out_dir = flag_value;
    return;
  }
  if (!manifest.out_dir.empty()) return;
  if (const char* env = std::getenv("AOIFL_OUT_DIR"); env != nullptr && *env != '\0') {
    manifest.out_dir = env;
    return;
  }
  manifest.out_dir = "runs";
}

void apply_seed_override(aoifl::RunManifest& manifest, const std::vector<std::uint64_t>& seeds) {
  if (seeds.empty()) return;
  for (std::size_t i = 0; i < seeds.size(); ++i)
    for (std::size_t j = i + 1; j < seeds.size(); ++j)
      if (seeds[i] == seeds[j]) throw aoifl::ConfigError("--seeds: duplicate seed " + std::to_string(seeds[i]));
  manifest.seeds = seeds;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Federated intrusion detection with age-of-information guided client selection"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir_flag;
  std::string policy_flag;
  std::string scenario_flag;
  std::string gen_out;
  std::vector<std::uint64_t> seeds;
  std::vector<double> lambdas;
  int workers = 0;
  bool save_final_models = false;

  CLI::App* run = app.add_subcommand("run", "Run every (scenario, policy, seed) cell of a config grid");
  run->add_option("config", config_path, "JSON config file")->required()->check(CLI::ExistingFile);
  run->add_option("--seeds", seeds, "Override the config's seed list");
  run->add_option("--out-dir", out_dir_flag, "Override the output directory");
  run->add_option("--workers", workers, "Concurrent runs (default: config value)");
  run->add_option("--policy", policy_flag, "Restrict the grid to one policy");
  run->add_option("--scenario", scenario_flag, "Restrict the grid to one scenario");
  run->add_flag("--save-final-models", save_final_models, "Write final_model.bin per run");

  CLI::App* sweep = app.add_subcommand("sweep-lambda", "Sweep the hybrid policy's lambda over the first scenario");
  sweep->add_option("config", config_path, "JSON config file")->required()->check(CLI::ExistingFile);
  sweep->add_option("--lambdas", lambdas, "Lambda values in [0, 1]")->required();
  sweep->add_option("--seeds", seeds, "Override the config's seed list");
  sweep->add_option("--out-dir", out_dir_flag, "Override the output directory");
  sweep->add_option("--workers", workers, "Concurrent runs (default: config value)");

  CLI::App* gen = app.add_subcommand("gen-synthetic", "Export the config's synthetic dataset as CSV");
  gen->add_option("config", config_path, "JSON config file")->required()->check(CLI::ExistingFile);
  gen->add_option("--out", gen_out, "Directory for train.csv / test.csv / sample_time.csv")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    aoifl::RunManifest manifest = aoifl::parse_config(config_path);
    apply_seed_override(manifest, seeds);
    if (workers != 0) {
      if (workers < 1) throw aoifl::ConfigError("--workers: must be at least 1");
      manifest.workers = workers;
    }
    if (save_final_models) manifest.save_final_models = true;
    if (!policy_flag.empty()) manifest.policies = {aoifl::policy_from_string(policy_flag)};
    if (!scenario_flag.empty()) manifest.scenarios = {aoifl::scenario_from_string(scenario_flag)};
    resolve_out_dir(manifest, out_dir_flag);

    if (run->parsed()) return aoifl::execute(manifest);
    if (sweep->parsed()) return aoifl::lambda_sweep(manifest, lambdas);
    if (gen->parsed()) return aoifl::gen_synthetic(manifest, gen_out);
    return 1;
  } catch (const aoifl::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
