// Copyright 2026 The lanekeep Authors
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

#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "lanekeep/cli.hpp"
#include "lanekeep/config.hpp"
#include "lanekeep/errors.hpp"

namespace {

lanekeep::RunConfig load_config(const std::string& path,
                                const std::vector<std::string>& overrides) {
  lanekeep::RunConfig cfg =
      path.empty() ? lanekeep::RunConfig() : lanekeep::RunConfig::from_file(path);
  for (const auto& o : overrides) cfg.apply_override(o);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lanekeep: skid-steer lane-keeping simulation and benchmark suite"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  std::size_t jobs = std::max(1u, std::thread::hardware_concurrency());
  app.add_option("-c,--config", config_path, "run configuration file")->check(CLI::ExistingFile);
  app.add_option("--set", overrides, "override a config key (key=value)");
  app.add_option("-j,--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);

  std::string out, track_dir, curve, experiment, policy;
  std::size_t episodes = 0, iterations = 0, dump = 0;
  bool plot = false;
  bool has_iterations = false;

  auto* gen = app.add_subcommand("gen-track", "generate a track bundle");
  gen->add_option("-o,--out", out, "output directory")->required();

  auto* run = app.add_subcommand("run", "run episodes and write per-step CSVs");
  run->add_option("-t,--track", track_dir, "track bundle directory")->required();
  run->add_option("-o,--out", out, "output directory")->required();
  run->add_option("-n,--episodes", episodes, "episode count");
  run->add_option("-p,--policy", policy, "policy CSV");

  auto* train = app.add_subcommand("train", "train a linear policy with CEM");
  train->add_option("-t,--track", track_dir, "track bundle directory")->required();
  train->add_option("-o,--out", out, "policy CSV")->required();
  train->add_option("--curve", curve, "training curve CSV");
  train->add_option("--iterations", iterations, "CEM iterations")
      ->each([&](const std::string&) { has_iterations = true; });

  auto* eval = app.add_subcommand("eval", "evaluate the configured controller");
  eval->add_option("-t,--track", track_dir, "track bundle directory")->required();
  eval->add_option("-o,--out", out, "output directory")->required();
  eval->add_option("-n,--episodes", episodes, "episode count");
  eval->add_option("-p,--policy", policy, "policy CSV");

  auto* sweep = app.add_subcommand("sweep", "run an experiment grid");
  sweep->add_option("-t,--track", track_dir, "track bundle directory")->required();
  sweep->add_option("-e,--experiment", experiment, "experiment name")->required();
  sweep->add_option("-o,--out", out, "output directory")->required();
  sweep->add_option("-p,--policy", policy, "policy CSV");
  sweep->add_flag("--plot", plot, "also write an SVG plot");

  auto* feat = app.add_subcommand("features", "feature KL study");
  feat->add_option("-t,--track", track_dir, "track bundle directory")->required();
  feat->add_option("-o,--out", out, "output directory")->required();
  feat->add_option("--dump-images", dump, "also write this many frames and features");

  CLI11_PARSE(app, argc, argv);

  try {
    lanekeep::RunConfig cfg = load_config(config_path, overrides);
    if (episodes > 0) cfg.set("eval.episodes", std::to_string(episodes));
    if (!policy.empty()) cfg.set("policy.file", policy);
    if (has_iterations) cfg.set("cem.iterations", std::to_string(iterations));
    if (*gen) return lanekeep::cmd_gen_track(cfg, out);
    if (*run) return lanekeep::cmd_run(cfg, track_dir, out, jobs);
    if (*train) {
      if (curve.empty()) curve = out + ".curve.csv";
      return lanekeep::cmd_train(cfg, track_dir, out, curve, jobs);
    }
    if (*eval) return lanekeep::cmd_eval(cfg, track_dir, out, jobs);
    if (*sweep) return lanekeep::cmd_sweep(cfg, track_dir, experiment, out, jobs, plot);
    if (*feat) return lanekeep::cmd_features(cfg, track_dir, out, dump);
  } catch (const lanekeep::InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return lanekeep::kExitInfeasible;
  } catch (const lanekeep::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return lanekeep::kExitConfig;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return lanekeep::kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return lanekeep::kExitConfig;
  }
  return lanekeep::kExitOk;
}
