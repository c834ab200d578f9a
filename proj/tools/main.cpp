// Copyright 2026 The critiquerec Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
// https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "critiquerec/catalog.hpp"
#include "critiquerec/config.hpp"
#include "critiquerec/error.hpp"
#include "critiquerec/experiment.hpp"
#include "critiquerec/synthetic.hpp"

namespace fs = std::filesystem;
using namespace critiquerec;

namespace {

struct Overrides {
  std::optional<std::string> config;
  std::optional<std::string> dataset;
  std::optional<std::string> schema;
  std::optional<std::string> out;
  std::optional<std::int64_t> seed;
  std::optional<std::int64_t> history_size;
  std::optional<std::int64_t> loops;
  std::vector<int> ns;
  std::optional<std::string> mode;
  std::optional<std::string> backend;
  std::optional<std::int64_t> workers;
  std::optional<std::int64_t> eval_users;
  std::optional<std::int64_t> candidate_size;
  std::optional<std::int64_t> epochs;
  std::vector<std::string> set;
};

void AddCommon(CLI::App* cmd, Overrides& o) {
  cmd->add_option("-c,--config", o.config, "Experiment config (TOML)");
  cmd->add_option("--dataset", o.dataset, "Dataset JSONL path");
  cmd->add_option("--schema", o.schema, "movies | books | generic");
  cmd->add_option("--out", o.out, "Output directory; all artifact paths are relative to it");
  cmd->add_option("--seed", o.seed, "Experiment seed");
  cmd->add_option("--history-size", o.history_size, "Interactions per sampled history");
  cmd->add_option("--epochs", o.epochs, "Critic training epochs");
  cmd->add_option("--set", o.set, "Override any config key: section.key=value")
      ->type_name("KEY=VALUE");
}

void AddLoopOptions(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--loops", o.loops, "Critique loops (0 = no critic)");
  cmd->add_option("--ns", o.ns, "Metric cutoffs")->delimiter(',');
  cmd->add_option("--mode", o.mode, "real_only | oracle | candidate_set");
  cmd->add_option("--backend", o.backend, "mock | remote");
  cmd->add_option("--workers", o.workers, "Concurrent users");
  cmd->add_option("--eval-users", o.eval_users, "Limit evaluated test users (0 = all)");
  cmd->add_option("--candidate-size", o.candidate_size, "Candidate set size");
}

ExperimentConfig Resolve(Overrides const& o, std::optional<fs::path> fallback_config = {}) {
  ExperimentConfig cfg;
  if (o.config) {
    ApplyConfig(ConfigDocument::Load(*o.config), cfg);
  } else if (fallback_config && fs::exists(*fallback_config)) {
    ApplyConfig(ConfigDocument::Load(*fallback_config), cfg);
  }
  ConfigDocument flags;
  if (o.dataset) flags.Set("dataset.path", ConfigValue::String(*o.dataset));
  if (o.schema) flags.Set("dataset.schema", ConfigValue::String(*o.schema));
  if (o.out) flags.Set("experiment.out", ConfigValue::String(*o.out));
  if (o.seed) flags.Set("experiment.seed", ConfigValue::Integer(*o.seed));
  if (o.history_size) flags.Set("experiment.history_size", ConfigValue::Integer(*o.history_size));
  if (o.epochs) flags.Set("critic.epochs", ConfigValue::Integer(*o.epochs));
  if (o.loops) flags.Set("loop.loops", ConfigValue::Integer(*o.loops));
  if (!o.ns.empty()) {
    ConfigValue v;
    v.kind = ConfigValue::Kind::kArray;
    for (int n : o.ns) v.items.push_back(ConfigValue::Integer(n));
    flags.Set("loop.ns", v);
  }
  if (o.mode) flags.Set("loop.mode", ConfigValue::String(*o.mode));
  if (o.backend) flags.Set("backend.kind", ConfigValue::String(*o.backend));
  if (o.workers) flags.Set("experiment.workers", ConfigValue::Integer(*o.workers));
  if (o.eval_users) flags.Set("experiment.eval_users", ConfigValue::Integer(*o.eval_users));
  if (o.candidate_size) {
    flags.Set("loop.candidate_size", ConfigValue::Integer(*o.candidate_size));
  }
  for (auto const& kv : o.set) {
    auto const eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects KEY=VALUE, got '" + kv + "'");
    auto const doc = ConfigDocument::Parse(kv.substr(0, eq) + " = " + kv.substr(eq + 1), "--set");
    for (auto const& [k, v] : doc.values()) flags.Set(k, v);
  }
  ApplyConfig(flags, cfg);
  return cfg;
}

template <typename F>
int WithConfig(F&& run) {
  try {
    return run();
  } catch (ConfigError const& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (std::exception const& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LLM recommendation refinement with a collaborative-filtering critic"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  Overrides o;
  std::vector<std::size_t> sweep;
  std::string traces;
  std::optional<std::string> replay_out;
  std::vector<std::string> run_dirs;
  SyntheticConfig synth;
  std::string synth_path;

  auto* ingest = app.add_subcommand("ingest-check", "Load and validate a dataset");
  AddCommon(ingest, o);

  auto* train = app.add_subcommand("train-critic", "Train the recommendation critic");
  AddCommon(train, o);
  train->add_option("--users", sweep, "User sample size; several values run a sweep")
      ->delimiter(',');

  auto* oracle = app.add_subcommand("build-oracle", "Train the oracle on a larger user sample");
  AddCommon(oracle, o);
  std::optional<std::int64_t> oracle_users;
  oracle->add_option("--users", oracle_users, "Oracle user sample size");

  auto* run = app.add_subcommand("run-experiment", "Run critique loops and evaluate");
  AddCommon(run, o);
  AddLoopOptions(run, o);
  std::optional<std::int64_t> run_users;
  run->add_option("--users", run_users, "User sample size");

  auto* replay = app.add_subcommand("replay", "Recompute metrics from saved traces");
  AddCommon(replay, o);
  AddLoopOptions(replay, o);
  replay->add_option("--traces", traces, "traces.jsonl of a run")->required();
  replay->add_option("--report-dir", replay_out,
                     "Where to write the report (default: <run>/replay)");

  auto* report = app.add_subcommand("report", "Print the report of one or more runs");
  report->add_option("runs", run_dirs, "Run directories")->required();

  auto* synth_cmd = app.add_subcommand("synth", "Write the synthetic cluster benchmark dataset");
  synth_cmd->add_option("path", synth_path, "Output JSONL path")->required();
  synth_cmd->add_option("--clusters", synth.clusters, "Latent user clusters (1-4)");
  synth_cmd->add_option("--users-per-cluster", synth.users_per_cluster, "Users per cluster");
  synth_cmd->add_option("--items-per-user", synth.items_per_user, "Ratings per user");
  synth_cmd->add_option("--items-per-genre", synth.items_per_genre, "Catalog items per genre");
  synth_cmd->add_option("--noise", synth.label_noise, "Label noise probability");
  synth_cmd->add_option("--seed", synth.seed, "Generator seed");

  try {
    app.parse(argc, argv);
  } catch (CLI::ParseError const& e) {
    int const code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (*ingest) {
    return WithConfig([&] { return CmdIngestCheck(Resolve(o), std::cout, std::cerr); });
  }
  if (*train) {
    return WithConfig([&] { return CmdTrainCritic(Resolve(o), sweep, std::cout, std::cerr); });
  }
  if (*oracle) {
    return WithConfig([&] {
      auto cfg = Resolve(o);
      if (oracle_users) {
        if (*oracle_users < 1) throw ConfigError("--users must be >= 1");
        cfg.oracle_users = static_cast<std::size_t>(*oracle_users);
      }
      return CmdBuildOracle(cfg, std::cout, std::cerr);
    });
  }
  if (*run) {
    return WithConfig([&] {
      auto cfg = Resolve(o);
      if (run_users) {
        if (*run_users < 1) throw ConfigError("--users must be >= 1");
        cfg.users = static_cast<std::size_t>(*run_users);
      }
      return CmdRunExperiment(cfg, std::cout, std::cerr);
    });
  }
  if (*replay) {
    return WithConfig([&] {
      fs::path const run_dir = fs::path(traces).parent_path();
      auto cfg = Resolve(o, run_dir / "config.resolved.toml");
      if (!o.out) cfg.out = run_dir.string();
      fs::path const dest = replay_out ? fs::path(*replay_out) : run_dir / "replay";
      return CmdReplay(cfg, traces, dest, std::cout, std::cerr);
    });
  }
  if (*report) {
    std::vector<fs::path> dirs(run_dirs.begin(), run_dirs.end());
    return CmdReport(dirs, std::cout, std::cerr);
  }
  if (*synth_cmd) {
    return WithConfig([&] {
      auto const d = MakeClusterDataset(synth);
      SaveDataset(d, synth_path);
      std::cout << "wrote " << synth_path << ": " << d.users.size() << " users, "
                << d.items->size() << " items\n";
      return 0;
    });
  }
  return 2;
}
