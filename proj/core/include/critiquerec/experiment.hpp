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

#ifndef CRITIQUEREC_EXPERIMENT_HPP_
#define CRITIQUEREC_EXPERIMENT_HPP_

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "critiquerec/catalog.hpp"
#include "critiquerec/config.hpp"
#include "critiquerec/critic.hpp"
#include "critiquerec/critique_loop.hpp"
#include "critiquerec/embedder.hpp"
#include "critiquerec/llm_gateway.hpp"
#include "critiquerec/metrics.hpp"

namespace critiquerec {

inline constexpr char kVersion[] = "0.1.0";

struct EmbedderSettings {
  std::string kind = "hashed";  // hashed | remote
  int dim = 256;
  std::string url;
  std::string model;
  std::string token_env = "CRITIQUEREC_EMBEDDINGS_TOKEN";
  std::string cache = "embeddings.cache";
};

struct BackendSettings {
  std::string kind = "mock";  // mock | remote
  std::string url = "https://api.openai.com/v1/chat/completions";
  std::string model = "gpt-4o";
  double temperature = 0.0;
  int max_tokens = 1024;
  std::string token_env = "CRITIQUEREC_LLM_TOKEN";
  int max_in_flight = 4;
  int retries = 3;
  int timeout_s = 120;
  std::uint64_t mock_seed = 9;
  double mock_noise = 0.3;
  double mock_keep_fraction = 0.7;
};

struct ExperimentConfig {
  std::string dataset;
  std::string schema = "movies";
  std::uint64_t seed = 7;
  std::size_t users = 10000;
  std::size_t history_size = 20;
  SplitRatios split;
  /// Test users run through the loop; 0 evaluates the whole test split.
  std::size_t eval_users = 0;
  std::size_t workers = 1;
  std::string out = "runs/default";

  TrainConfig critic;
  /// Held-out items per user used as training targets; 0 uses all.
  std::size_t targets_per_user = 1;
  std::string critic_model = "critic.bin";
  std::size_t oracle_users = 30000;
  std::string oracle_model = "oracle.bin";

  EmbedderSettings embedder;
  BackendSettings backend;

  int loops = 1;
  std::vector<int> ns{3, 5, 10};
  EvalMode mode = EvalMode::kOracle;
  std::size_t candidate_size = 30;
  double relevance_threshold = 4.0;
  double min_parse_fraction = 0.5;
  PromptTemplates prompts;

  std::filesystem::path OutPath(std::string const& relative) const;
};

/// Applies every key in `doc` on top of `cfg`; unknown keys are errors.
void ApplyConfig(ConfigDocument const& doc, ExperimentConfig& cfg);
/// Throws ConfigError on inconsistent values.
void ValidateConfig(ExperimentConfig const& cfg);
/// Fully resolved config as a TOML document, sections in fixed order.
std::string ConfigToToml(ExperimentConfig const& cfg);
/// Hex digest of ConfigToToml.
std::string ConfigDigest(ExperimentConfig const& cfg);

std::unique_ptr<EmbeddingProvider> MakeEmbedder(ExperimentConfig const& cfg);
std::unique_ptr<LlmBackend> MakeBackend(ExperimentConfig const& cfg, Dataset const& dataset);

struct PreparedData {
  Dataset dataset;
  DatasetSplit split;
  std::size_t sampled_users = 0;
};

/// Loads the dataset, samples `users` users and splits them.
PreparedData PrepareData(ExperimentConfig const& cfg, std::size_t users);

struct TrainOutcome {
  CriticModel model;
  CriticEvaluation validation = CriticEvaluation();
  std::size_t train_examples = 0;
  std::size_t val_examples = 0;
  std::size_t skipped_users = 0;
};

TrainOutcome TrainOnSplit(Dataset const& train, Dataset const& val, ExperimentConfig const& cfg,
                          EmbeddingProvider const& provider, std::string const& tag);

/// Evaluation instances for the test users, with candidate sets in
/// candidate-set mode. Users with too few ratings are counted in `skipped`.
std::vector<EvalInstance> MakeEvalInstances(Dataset const& test, Dataset const& full,
                                            ExperimentConfig const& cfg, std::size_t* skipped);

struct LoopRun {
  std::vector<LoopTrace> traces;
  /// Set when a backend failure stopped the run early.
  std::optional<std::string> aborted;
};

/// Runs each instance's loop on `workers` threads; traces come back in
/// instance order. With `stop_on_error`, the first truncated trace stops
/// dispatch and only the completed prefix is returned.
LoopRun RunLoops(std::span<EvalInstance const> instances, LoopConfig const& loop_cfg,
                 LlmBackend& backend, CriticModel const& critic, ExampleEncoder const& encoder,
                 Catalog const& catalog, std::size_t workers, bool stop_on_error);

LoopConfig MakeLoopConfig(ExperimentConfig const& cfg, Dataset const& dataset);

// Commands. Return the process exit code: 0 success, 1 failure, 2 usage or
// configuration error.

int CmdIngestCheck(ExperimentConfig const& cfg, std::ostream& out, std::ostream& err);
/// Trains one critic per entry of `sweep` (empty = cfg.users) on a shared
/// validation split.
int CmdTrainCritic(ExperimentConfig const& cfg, std::vector<std::size_t> const& sweep,
                   std::ostream& out, std::ostream& err);
int CmdBuildOracle(ExperimentConfig const& cfg, std::ostream& out, std::ostream& err);
int CmdRunExperiment(ExperimentConfig const& cfg, std::ostream& out, std::ostream& err);
/// Recomputes the report of a run from its traces. `cfg` supplies the
/// dataset, oracle and Ns; results go to `out_dir`.
int CmdReplay(ExperimentConfig const& cfg, std::filesystem::path const& traces,
              std::filesystem::path const& out_dir, std::ostream& out, std::ostream& err);
int CmdReport(std::vector<std::filesystem::path> const& run_dirs, std::ostream& out,
              std::ostream& err);

}  // namespace critiquerec

#endif  // CRITIQUEREC_EXPERIMENT_HPP_
