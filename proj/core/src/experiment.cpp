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

#include "critiquerec/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <exception>
#include <fstream>
#include <functional>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "critiquerec/error.hpp"
#include "critiquerec/random.hpp"
#include "critiquerec/synthetic.hpp"
#include "json.hpp"

namespace critiquerec {

std::filesystem::path ExperimentConfig::OutPath(std::string const& relative) const {
  std::filesystem::path p(relative);
  if (p.is_absolute()) return p;
  return std::filesystem::path(out) / p;
}

// ---------------------------------------------------------------------------
// Config binding

namespace {

struct Binding {
  std::string key;
  std::function<ConfigValue(ExperimentConfig const&)> get;
  std::function<void(ExperimentConfig&, ConfigDocument const&, std::string const&)> set;
};

template <typename F>
Binding Str(std::string key, F field) {
  return {std::move(key),
          [field](ExperimentConfig const& c) {
            return ConfigValue::String(field(const_cast<ExperimentConfig&>(c)));
          },
          [field](ExperimentConfig& c, ConfigDocument const& d, std::string const& k) {
            field(c) = *d.GetString(k);
          }};
}

template <typename F>
Binding Int(std::string key, F field) {
  return {std::move(key),
          [field](ExperimentConfig const& c) {
            return ConfigValue::Integer(
                static_cast<std::int64_t>(field(const_cast<ExperimentConfig&>(c))));
          },
          [field](ExperimentConfig& c, ConfigDocument const& d, std::string const& k) {
            auto const v = *d.GetInteger(k);
            using T = std::remove_reference_t<decltype(field(c))>;
            if (std::is_unsigned_v<T> && v < 0) {
              throw ConfigError("config key '" + k + "' must be non-negative");
            }
            field(c) = static_cast<T>(v);
          }};
}

template <typename F>
Binding Num(std::string key, F field) {
  return {std::move(key),
          [field](ExperimentConfig const& c) {
            return ConfigValue::Float(field(const_cast<ExperimentConfig&>(c)));
          },
          [field](ExperimentConfig& c, ConfigDocument const& d, std::string const& k) {
            field(c) = *d.GetNumber(k);
          }};
}

std::vector<Binding> const& Bindings() {
  static std::vector<Binding> const bindings = [] {
    using C = ExperimentConfig;
    std::vector<Binding> b;
    b.push_back(Str("dataset.path", [](C& c) -> auto& { return c.dataset; }));
    b.push_back(Str("dataset.schema", [](C& c) -> auto& { return c.schema; }));

    b.push_back(Int("experiment.seed", [](C& c) -> auto& { return c.seed; }));
    b.push_back(Int("experiment.users", [](C& c) -> auto& { return c.users; }));
    b.push_back(Int("experiment.history_size", [](C& c) -> auto& { return c.history_size; }));
    b.push_back({"experiment.split",
                 [](C const& c) {
                   ConfigValue v;
                   v.kind = ConfigValue::Kind::kArray;
                   v.items = {ConfigValue::Float(c.split.train), ConfigValue::Float(c.split.val),
                              ConfigValue::Float(c.split.test)};
                   return v;
                 },
                 [](C& c, ConfigDocument const& d, std::string const& k) {
                   auto const v = *d.GetNumberList(k);
                   if (v.size() != 3) throw ConfigError("experiment.split needs 3 fractions");
                   c.split = {v[0], v[1], v[2]};
                 }});
    b.push_back(Int("experiment.eval_users", [](C& c) -> auto& { return c.eval_users; }));
    b.push_back(Int("experiment.workers", [](C& c) -> auto& { return c.workers; }));
    b.push_back(Str("experiment.out", [](C& c) -> auto& { return c.out; }));

    b.push_back(Num("critic.learning_rate", [](C& c) -> auto& { return c.critic.learning_rate; }));
    b.push_back(Int("critic.epochs", [](C& c) -> auto& { return c.critic.epochs; }));
    b.push_back(Int("critic.batch_size", [](C& c) -> auto& { return c.critic.batch_size; }));
    b.push_back(Int("critic.hidden", [](C& c) -> auto& { return c.critic.hidden; }));
    b.push_back(Int("critic.seed", [](C& c) -> auto& { return c.critic.seed; }));
    b.push_back(Int("critic.patience", [](C& c) -> auto& { return c.critic.patience; }));
    b.push_back(
        Int("critic.targets_per_user", [](C& c) -> auto& { return c.targets_per_user; }));
    b.push_back(Str("critic.model", [](C& c) -> auto& { return c.critic_model; }));

    b.push_back(Int("oracle.users", [](C& c) -> auto& { return c.oracle_users; }));
    b.push_back(Str("oracle.model", [](C& c) -> auto& { return c.oracle_model; }));

    b.push_back(Str("embedder.kind", [](C& c) -> auto& { return c.embedder.kind; }));
    b.push_back(Int("embedder.dim", [](C& c) -> auto& { return c.embedder.dim; }));
    b.push_back(Str("embedder.url", [](C& c) -> auto& { return c.embedder.url; }));
    b.push_back(Str("embedder.model", [](C& c) -> auto& { return c.embedder.model; }));
    b.push_back(Str("embedder.token_env", [](C& c) -> auto& { return c.embedder.token_env; }));
    b.push_back(Str("embedder.cache", [](C& c) -> auto& { return c.embedder.cache; }));

    b.push_back(Str("backend.kind", [](C& c) -> auto& { return c.backend.kind; }));
    b.push_back(Str("backend.url", [](C& c) -> auto& { return c.backend.url; }));
    b.push_back(Str("backend.model", [](C& c) -> auto& { return c.backend.model; }));
    b.push_back(Num("backend.temperature", [](C& c) -> auto& { return c.backend.temperature; }));
    b.push_back(Int("backend.max_tokens", [](C& c) -> auto& { return c.backend.max_tokens; }));
    b.push_back(Str("backend.token_env", [](C& c) -> auto& { return c.backend.token_env; }));
    b.push_back(
        Int("backend.max_in_flight", [](C& c) -> auto& { return c.backend.max_in_flight; }));
    b.push_back(Int("backend.retries", [](C& c) -> auto& { return c.backend.retries; }));
    b.push_back(Int("backend.timeout_s", [](C& c) -> auto& { return c.backend.timeout_s; }));
    b.push_back(Int("backend.mock_seed", [](C& c) -> auto& { return c.backend.mock_seed; }));
    b.push_back(Num("backend.mock_noise", [](C& c) -> auto& { return c.backend.mock_noise; }));
    b.push_back(Num("backend.mock_keep_fraction",
                    [](C& c) -> auto& { return c.backend.mock_keep_fraction; }));

    b.push_back(Int("loop.loops", [](C& c) -> auto& { return c.loops; }));
    b.push_back({"loop.ns",
                 [](C const& c) {
                   ConfigValue v;
                   v.kind = ConfigValue::Kind::kArray;
                   for (int n : c.ns) v.items.push_back(ConfigValue::Integer(n));
                   return v;
                 },
                 [](C& c, ConfigDocument const& d, std::string const& k) {
                   auto const list = *d.GetIntegerList(k);
                   c.ns.clear();
                   for (auto n : list) c.ns.push_back(static_cast<int>(n));
                 }});
    b.push_back({"loop.mode",
                 [](C const& c) { return ConfigValue::String(std::string(EvalModeName(c.mode))); },
                 [](C& c, ConfigDocument const& d, std::string const& k) {
                   auto const name = *d.GetString(k);
                   auto mode = ParseEvalMode(name);
                   if (!mode) {
                     throw ConfigError("loop.mode must be real_only, oracle or candidate_set, got '" +
                                       name + "'");
                   }
                   c.mode = *mode;
                 }});
    b.push_back(Int("loop.candidate_size", [](C& c) -> auto& { return c.candidate_size; }));
    b.push_back(
        Num("loop.relevance_threshold", [](C& c) -> auto& { return c.relevance_threshold; }));
    b.push_back(
        Num("loop.min_parse_fraction", [](C& c) -> auto& { return c.min_parse_fraction; }));

    b.push_back(Str("prompts.system", [](C& c) -> auto& { return c.prompts.system; }));
    b.push_back(
        Str("prompts.history_header", [](C& c) -> auto& { return c.prompts.history_header; }));
    b.push_back(Str("prompts.candidate_header",
                    [](C& c) -> auto& { return c.prompts.candidate_header; }));
    b.push_back(Str("prompts.initial_instruction",
                    [](C& c) -> auto& { return c.prompts.initial_instruction; }));
    b.push_back(Str("prompts.candidate_instruction",
                    [](C& c) -> auto& { return c.prompts.candidate_instruction; }));
    b.push_back(
        Str("prompts.feedback_header", [](C& c) -> auto& { return c.prompts.feedback_header; }));
    b.push_back(Str("prompts.refinement_instruction",
                    [](C& c) -> auto& { return c.prompts.refinement_instruction; }));
    b.push_back(Str("prompts.format_instruction",
                    [](C& c) -> auto& { return c.prompts.format_instruction; }));
    return b;
  }();
  return bindings;
}

}  // namespace

void ApplyConfig(ConfigDocument const& doc, ExperimentConfig& cfg) {
  auto const& bindings = Bindings();
  for (auto const& [key, value] : doc.values()) {
    auto it = std::find_if(bindings.begin(), bindings.end(),
                           [&](Binding const& b) { return b.key == key; });
    if (it == bindings.end()) throw ConfigError("unknown config key '" + key + "'");
    it->set(cfg, doc, key);
  }
}

void ValidateConfig(ExperimentConfig const& cfg) {
  if (!ParseSchema(cfg.schema)) {
    throw ConfigError("dataset.schema must be movies, books or generic");
  }
  double const sum = cfg.split.train + cfg.split.val + cfg.split.test;
  if (cfg.split.train < 0 || cfg.split.val < 0 || cfg.split.test < 0 ||
      std::abs(sum - 1.0) > 1e-9) {
    throw ConfigError("experiment.split fractions must be >= 0 and sum to 1");
  }
  if (cfg.history_size < 1) throw ConfigError("experiment.history_size must be >= 1");
  if (cfg.workers < 1) throw ConfigError("experiment.workers must be >= 1");
  if (!(cfg.critic.learning_rate > 0)) throw ConfigError("critic.learning_rate must be > 0");
  if (cfg.critic.epochs < 1) throw ConfigError("critic.epochs must be >= 1");
  if (cfg.critic.batch_size < 1) throw ConfigError("critic.batch_size must be >= 1");
  if (cfg.critic.hidden < 1) throw ConfigError("critic.hidden must be >= 1");
  if (cfg.critic.patience < 1) throw ConfigError("critic.patience must be >= 1");
  if (cfg.embedder.kind != "hashed" && cfg.embedder.kind != "remote") {
    throw ConfigError("embedder.kind must be hashed or remote");
  }
  if (cfg.embedder.dim < 1) throw ConfigError("embedder.dim must be >= 1");
  if (cfg.embedder.kind == "remote" && cfg.embedder.url.empty()) {
    throw ConfigError("embedder.url is required for the remote embedder");
  }
  if (cfg.backend.kind != "mock" && cfg.backend.kind != "remote") {
    throw ConfigError("backend.kind must be mock or remote");
  }
  if (cfg.backend.temperature < 0 || cfg.backend.temperature > 2) {
    throw ConfigError("backend.temperature must be in [0, 2]");
  }
  if (cfg.backend.max_in_flight < 1) throw ConfigError("backend.max_in_flight must be >= 1");
  if (cfg.backend.retries < 1) throw ConfigError("backend.retries must be >= 1");
  if (cfg.loops < 0) throw ConfigError("loop.loops must be >= 0");
  if (cfg.ns.empty()) throw ConfigError("loop.ns must not be empty");
  for (int n : cfg.ns) {
    if (n < 1) throw ConfigError("loop.ns entries must be >= 1");
  }
  if (cfg.candidate_size < 1) throw ConfigError("loop.candidate_size must be >= 1");
  if (cfg.min_parse_fraction < 0 || cfg.min_parse_fraction > 1) {
    throw ConfigError("loop.min_parse_fraction must be in [0, 1]");
  }
}

std::string ConfigToToml(ExperimentConfig const& cfg) {
  std::string out;
  std::string section;
  for (auto const& b : Bindings()) {
    auto const dot = b.key.find('.');
    std::string const sec = b.key.substr(0, dot);
    if (sec != section) {
      if (!section.empty()) out += "\n";
      out += "[" + sec + "]\n";
      section = sec;
    }
    out += b.key.substr(dot + 1) + " = " + b.get(cfg).Render() + "\n";
  }
  return out;
}

std::string ConfigDigest(ExperimentConfig const& cfg) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(Fnv1a64(ConfigToToml(cfg))));
  return buf;
}

// ---------------------------------------------------------------------------
// Pipeline pieces

namespace {

std::string EnvOrEmpty(std::string const& name) {
  if (name.empty()) return {};
  char const* v = std::getenv(name.c_str());
  return v ? std::string(v) : std::string();
}

void WriteFile(std::filesystem::path const& path, std::string const& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot write " + path.string());
  f << content;
  if (!f) throw Error("failed writing " + path.string());
}

std::string ReadFile(std::filesystem::path const& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot read " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::string UtcNow() {
  auto const now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string Fixed(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

Dataset WithFirstUsers(Dataset const& d, std::size_t count) {
  Dataset out = d;
  if (out.users.size() > count) out.users.resize(count);
  return out;
}

}  // namespace

std::unique_ptr<EmbeddingProvider> MakeEmbedder(ExperimentConfig const& cfg) {
  if (cfg.embedder.kind == "hashed") {
    return std::make_unique<HashedEmbeddingProvider>(cfg.embedder.dim);
  }
  RemoteEmbeddingConfig rc;
  rc.url = cfg.embedder.url;
  rc.model = cfg.embedder.model;
  rc.token = EnvOrEmpty(cfg.embedder.token_env);
  rc.dim = cfg.embedder.dim;
  if (!cfg.embedder.cache.empty()) rc.cache_path = cfg.OutPath(cfg.embedder.cache);
  rc.retry.max_attempts = cfg.backend.retries;
  return std::make_unique<RemoteEmbeddingProvider>(std::move(rc));
}

std::unique_ptr<LlmBackend> MakeBackend(ExperimentConfig const& cfg, Dataset const& dataset) {
  if (cfg.backend.kind == "mock") {
    MockBackendConfig mc;
    mc.seed = cfg.backend.mock_seed;
    mc.catalog = MockCatalogFromDataset(dataset);
    mc.noise = cfg.backend.mock_noise;
    mc.keep_fraction = cfg.backend.mock_keep_fraction;
    mc.templates = cfg.prompts;
    return std::make_unique<MockLlmBackend>(std::move(mc));
  }
  RemoteBackendConfig rc;
  rc.url = cfg.backend.url;
  rc.model = cfg.backend.model;
  rc.token = EnvOrEmpty(cfg.backend.token_env);
  rc.retry.max_attempts = cfg.backend.retries;
  rc.timeout = std::chrono::seconds(cfg.backend.timeout_s);
  rc.max_in_flight = cfg.backend.max_in_flight;
  return std::make_unique<RemoteLlmBackend>(std::move(rc));
}

PreparedData PrepareData(ExperimentConfig const& cfg, std::size_t users) {
  if (cfg.dataset.empty()) throw ConfigError("no dataset path given (dataset.path / --dataset)");
  if (!std::filesystem::exists(cfg.dataset)) {
    throw ConfigError("dataset file not found: " + cfg.dataset);
  }
  PreparedData p;
  p.dataset = LoadDataset(cfg.dataset, *ParseSchema(cfg.schema));
  auto const sample = SampleUsers(p.dataset, users, DeriveSeed(cfg.seed, "users"));
  p.sampled_users = sample.users.size();
  p.split = SplitUsers(sample, cfg.split, cfg.seed);
  return p;
}

TrainOutcome TrainOnSplit(Dataset const& train, Dataset const& val, ExperimentConfig const& cfg,
                          EmbeddingProvider const& provider, std::string const& tag) {
  std::size_t skipped_train = 0, skipped_val = 0;
  auto const train_ex =
      MakeExamples(train, cfg.history_size, cfg.targets_per_user, cfg.seed, &skipped_train);
  auto const val_ex =
      MakeExamples(val, cfg.history_size, cfg.targets_per_user, cfg.seed, &skipped_val);
  if (train_ex.empty()) {
    throw DatasetError("no training examples: every training user has <= " +
                       std::to_string(cfg.history_size) + " ratings");
  }
  ExampleEncoder const encoder(provider, *train.items, train.scale);
  auto const enc_train = encoder.EncodeAll(train_ex);
  auto const enc_val = encoder.EncodeAll(val_ex);
  TrainOutcome out{TrainCritic(enc_train, enc_val, cfg.critic, train.scale, provider.dim(),
                               provider.Fingerprint(), tag)};
  if (!enc_val.empty()) out.validation = EvaluateCritic(out.model, enc_val);
  out.train_examples = enc_train.size();
  out.val_examples = enc_val.size();
  out.skipped_users = skipped_train + skipped_val;
  return out;
}

std::vector<EvalInstance> MakeEvalInstances(Dataset const& test, Dataset const& full,
                                            ExperimentConfig const& cfg, std::size_t* skipped) {
  std::vector<EvalInstance> out;
  std::size_t skip = 0;
  for (auto const& user : test.users) {
    auto inst = SampleEvalInstance(user, cfg.history_size, cfg.seed);
    if (!inst) {
      ++skip;
      continue;
    }
    if (cfg.eval_users != 0 && out.size() >= cfg.eval_users) continue;
    if (cfg.mode == EvalMode::kCandidateSet) {
      AttachCandidateSet(*inst, full, cfg.candidate_size, cfg.seed);
    }
    out.push_back(std::move(*inst));
  }
  if (skipped != nullptr) *skipped = skip;
  return out;
}

LoopConfig MakeLoopConfig(ExperimentConfig const& cfg, Dataset const& dataset) {
  LoopConfig lc;
  lc.loops = cfg.loops;
  lc.n = static_cast<std::size_t>(*std::max_element(cfg.ns.begin(), cfg.ns.end()));
  lc.min_parse_fraction = cfg.min_parse_fraction;
  lc.model = cfg.backend.model;
  lc.temperature = cfg.backend.temperature;
  lc.max_tokens = cfg.backend.max_tokens;
  lc.prompt.schema = dataset.schema;
  lc.prompt.items = dataset.items.get();
  lc.prompt.scale = dataset.scale;
  lc.prompt.templates = cfg.prompts;
  return lc;
}

LoopRun RunLoops(std::span<EvalInstance const> instances, LoopConfig const& loop_cfg,
                 LlmBackend& backend, CriticModel const& critic, ExampleEncoder const& encoder,
                 Catalog const& catalog, std::size_t workers, bool stop_on_error) {
  std::vector<std::optional<LoopTrace>> slots(instances.size());
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::mutex mu;
  std::exception_ptr failure;

  auto work = [&] {
    while (!stop.load()) {
      std::size_t const i = next.fetch_add(1);
      if (i >= instances.size()) return;
      try {
        auto trace = RunLoop(instances[i], loop_cfg, backend, critic, encoder, catalog);
        bool const truncated = trace.truncated;
        slots[i] = std::move(trace);
        if (truncated && stop_on_error) stop.store(true);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!failure) failure = std::current_exception();
        stop.store(true);
      }
    }
  };
  std::size_t const n_threads = std::max<std::size_t>(1, std::min(workers, instances.size()));
  if (n_threads == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  LoopRun run;
  for (auto& slot : slots) {
    if (!slot) break;
    if (slot->truncated && stop_on_error && !run.aborted) {
      run.aborted = "user " + slot->user_id + ": " + slot->error;
    }
    run.traces.push_back(std::move(*slot));
  }
  if (run.traces.size() < instances.size() && !run.aborted) {
    run.aborted = "run stopped before all users completed";
  }
  return run;
}

// ---------------------------------------------------------------------------
// Commands

namespace {

template <typename F>
int Guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (ConfigError const& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (std::exception const& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

std::string TrainingLogJson(CriticModel const& model, CriticEvaluation const& val,
                            std::size_t users, std::size_t train_examples,
                            std::size_t val_examples) {
  nlohmann::ordered_json j;
  j["tag"] = model.tag();
  j["users"] = users;
  j["train_examples"] = train_examples;
  j["val_examples"] = val_examples;
  j["val_micro_accuracy"] = val.micro_accuracy;
  j["val_micro_recall"] = val.micro_recall;
  j["val_accuracy"] = val.accuracy;
  auto epochs = nlohmann::ordered_json::array();
  for (auto const& e : model.training_log()) {
    epochs.push_back(
        {{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"val_accuracy", e.val_accuracy}});
  }
  j["epochs"] = epochs;
  return j.dump(2) + "\n";
}

void PrintTrainingLog(CriticModel const& model, std::ostream& out) {
  out << "  epoch  train_loss  val_accuracy\n";
  for (auto const& e : model.training_log()) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "  %5d  %10.6f  %12.4f\n", e.epoch, e.train_loss,
                  e.val_accuracy);
    out << buf;
  }
}

std::filesystem::path SweepPath(std::filesystem::path const& base, std::size_t users) {
  auto p = base;
  p.replace_filename(base.stem().string() + "-u" + std::to_string(users) +
                     base.extension().string());
  return p;
}

struct TrainedArtifact {
  std::filesystem::path model;
  std::filesystem::path log;
  double val_accuracy = 0.0;
};

std::vector<TrainedArtifact> TrainSizes(ExperimentConfig const& cfg,
                                        std::vector<std::size_t> sizes,
                                        std::filesystem::path const& model_path,
                                        std::string const& tag, std::ostream& out) {
  std::size_t const largest = *std::max_element(sizes.begin(), sizes.end());
  auto const data = PrepareData(cfg, largest);
  if (data.sampled_users < largest) {
    out << "note: dataset has " << data.sampled_users << " users, fewer than the requested "
        << largest << "\n";
  }
  auto const provider = MakeEmbedder(cfg);
  std::vector<TrainedArtifact> artifacts;
  for (std::size_t size : sizes) {
    double const scale =
        static_cast<double>(std::min(size, data.sampled_users)) /
        static_cast<double>(std::max<std::size_t>(1, data.sampled_users));
    auto const n_train = static_cast<std::size_t>(
        std::floor(scale * static_cast<double>(data.split.train.users.size()) + 1e-9));
    auto const train = WithFirstUsers(data.split.train, n_train);
    auto const result = TrainOnSplit(train, data.split.val, cfg, *provider, tag);
    auto const path = sizes.size() == 1 ? model_path : SweepPath(model_path, size);
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    SaveModel(result.model, path);
    auto log_path = path;
    log_path += ".log.json";
    WriteFile(log_path, TrainingLogJson(result.model, result.validation, size,
                                        result.train_examples, result.val_examples));
    out << tag << " users=" << size << " train_users=" << train.users.size()
        << " examples=" << result.train_examples << " val_examples=" << result.val_examples
        << " val_micro_accuracy=" << Fixed(result.validation.micro_accuracy)
        << " val_micro_recall=" << Fixed(result.validation.micro_recall) << "\n";
    PrintTrainingLog(result.model, out);
    out << "  wrote " << path.string() << "\n";
    artifacts.push_back({path, log_path, result.validation.micro_accuracy});
  }
  return artifacts;
}

void WriteResolvedConfig(ExperimentConfig const& cfg) {
  WriteFile(cfg.OutPath("config.resolved.toml"), ConfigToToml(cfg));
}

std::string RelativeToOut(ExperimentConfig const& cfg, std::filesystem::path const& p) {
  auto const rel = p.lexically_relative(cfg.out);
  if (!rel.empty() && rel.native().rfind("..", 0) != 0) return rel.generic_string();
  return p.generic_string();
}

CriticModel LoadRequiredModel(std::filesystem::path const& path, std::string const& command,
                              EmbeddingProvider const& provider) {
  if (!std::filesystem::exists(path)) {
    throw Error("model not found: " + path.string() + " (run " + command + " first)");
  }
  LoadModelOptions opts;
  opts.expected_fingerprint = provider.Fingerprint();
  return LoadModel(path, opts);
}

CriticSummary SummarizeCritic(ExperimentConfig const& cfg, Dataset const& test,
                              CriticModel const& critic, ExampleEncoder const& encoder) {
  auto const examples = MakeExamples(test, cfg.history_size, cfg.targets_per_user, cfg.seed);
  CriticSummary s;
  if (examples.empty()) return s;
  auto const encoded = encoder.EncodeAll(examples);
  auto const eval = EvaluateCritic(critic, encoded);
  s.samples = eval.samples;
  s.micro_accuracy = eval.micro_accuracy;
  s.micro_recall = eval.micro_recall;
  s.accuracy = eval.accuracy;
  return s;
}

void WriteReport(MetricsReport const& report, std::filesystem::path const& dir) {
  WriteFile(dir / "report.json", ReportToJson(report));
  WriteFile(dir / "report.txt", RenderReportTable(report));
  WriteFile(dir / "report.csv", RenderReportCsv(report));
}

}  // namespace

int CmdIngestCheck(ExperimentConfig const& cfg, std::ostream& out, std::ostream& err) {
  return Guarded(err, [&] {
    ValidateConfig(cfg);
    if (cfg.dataset.empty()) throw ConfigError("no dataset path given (--dataset)");
    if (!std::filesystem::exists(cfg.dataset)) {
      throw ConfigError("dataset file not found: " + cfg.dataset);
    }
    auto const d = LoadDataset(cfg.dataset, *ParseSchema(cfg.schema));
    auto const& s = d.summary;
    std::size_t short_users = 0;
    std::size_t interactions = 0;
    for (auto const& u : d.users) {
      interactions += u.interactions.size();
      if (u.interactions.size() <= cfg.history_size) ++short_users;
    }
    out << "dataset:            " << d.name << " (" << SchemaName(d.schema) << ")\n"
        << "rating scale:       " << RatingScale::Format(d.scale.min_rating()) << ".."
        << RatingScale::Format(d.scale.max_rating()) << " step "
        << RatingScale::Format(d.scale.step()) << ", " << d.scale.levels() << " levels\n"
        << "items:              " << d.items->size() << "\n"
        << "users:              " << d.users.size() << "\n"
        << "interactions:       " << interactions << "\n"
        << "rows read:          " << s.rows_read << "\n"
        << "rows kept:          " << s.rows_kept << "\n"
        << "rejected off-scale: " << s.rejected_off_scale << "\n"
        << "rejected no title:  " << s.rejected_missing_title << "\n"
        << "rejected duplicate: " << s.rejected_duplicate << "\n"
        << "malformed:          " << s.malformed << "\n";
    if (s.first_bad_line != 0) out << "first bad line:     " << s.first_bad_line << "\n";
    out << "users with <= " << cfg.history_size << " ratings (skipped in evaluation): "
        << short_users << "\n";
    return 0;
  });
}

int CmdTrainCritic(ExperimentConfig const& cfg, std::vector<std::size_t> const& sweep,
                   std::ostream& out, std::ostream& err) {
  return Guarded(err, [&] {
    ValidateConfig(cfg);
    std::vector<std::size_t> sizes = sweep.empty() ? std::vector<std::size_t>{cfg.users} : sweep;
    for (auto s : sizes) {
      if (s == 0) throw ConfigError("--users values must be >= 1");
    }
    auto const artifacts = TrainSizes(cfg, sizes, cfg.OutPath(cfg.critic_model), "critic", out);
    WriteResolvedConfig(cfg);
    if (artifacts.size() > 1) {
      out << "\nsweep (shared validation split)\n";
      for (std::size_t i = 0; i < artifacts.size(); ++i) {
        out << "  users=" << sizes[i] << "  val_micro_accuracy=" << Fixed(artifacts[i].val_accuracy)
            << "\n";
      }
    }
    return 0;
  });
}

int CmdBuildOracle(ExperimentConfig const& cfg, std::ostream& out, std::ostream& err) {
  return Guarded(err, [&] {
    ValidateConfig(cfg);
    if (cfg.oracle_users == 0) throw ConfigError("oracle.users must be >= 1");
    ExperimentConfig oracle_cfg = cfg;
    oracle_cfg.seed = DeriveSeed(cfg.seed, "oracle");
    TrainSizes(oracle_cfg, {cfg.oracle_users}, cfg.OutPath(cfg.oracle_model), "oracle", out);
    WriteResolvedConfig(cfg);
    return 0;
  });
}

int CmdRunExperiment(ExperimentConfig const& cfg, std::ostream& out, std::ostream& err) {
  return Guarded(err, [&] {
    ValidateConfig(cfg);
    auto const data = PrepareData(cfg, cfg.users);
    auto const provider = MakeEmbedder(cfg);
    auto const critic_path = cfg.OutPath(cfg.critic_model);
    auto const critic = LoadRequiredModel(critic_path, "train-critic", *provider);
    if (critic.scale() != data.dataset.scale) {
      throw Error("critic rating scale does not match the dataset");
    }
    std::optional<CriticModel> oracle;
    if (cfg.mode == EvalMode::kOracle) {
      oracle = LoadRequiredModel(cfg.OutPath(cfg.oracle_model), "build-oracle", *provider);
    }
    ExampleEncoder const encoder(*provider, *data.dataset.items, data.dataset.scale);
    std::size_t skipped = 0;
    auto const instances = MakeEvalInstances(data.split.test, data.dataset, cfg, &skipped);
    Catalog const catalog(data.dataset.items);
    auto backend = MakeBackend(cfg, data.dataset);
    auto const loop_cfg = MakeLoopConfig(cfg, data.dataset);

    out << "running " << instances.size() << " users, loops=" << cfg.loops
        << ", backend=" << backend->kind() << ", mode=" << EvalModeName(cfg.mode) << "\n";
    auto const run = RunLoops(instances, loop_cfg, *backend, critic, encoder, catalog,
                              cfg.workers, backend->kind() == "remote");

    std::string traces_text, transcripts_text;
    for (auto const& t : run.traces) {
      traces_text += TraceToJsonLine(t) + "\n";
      transcripts_text += TranscriptToJsonLines(t);
    }
    WriteFile(cfg.OutPath("traces.jsonl"), traces_text);
    WriteFile(cfg.OutPath("transcripts.jsonl"), transcripts_text);
    WriteResolvedConfig(cfg);

    RelevanceContext ctx;
    ctx.catalog = &catalog;
    ctx.oracle = oracle ? &*oracle : nullptr;
    ctx.oracle_encoder = &encoder;
    ctx.threshold = cfg.relevance_threshold;
    auto report = Aggregate(run.traces, cfg.mode, ctx, cfg.ns, skipped);
    report.critic = SummarizeCritic(cfg, data.split.test, critic, encoder);
    WriteReport(report, cfg.out);

    nlohmann::ordered_json m;
    m["version"] = kVersion;
    m["model_format"] = CriticModel::kFormatVersion;
    m["command"] = "run-experiment";
    m["config_digest"] = ConfigDigest(cfg);
    m["created_at"] = UtcNow();
    nlohmann::ordered_json a;
    a["config"] = "config.resolved.toml";
    a["critic_model"] = RelativeToOut(cfg, critic_path);
    a["oracle_model"] = oracle ? nlohmann::ordered_json(RelativeToOut(
                                     cfg, cfg.OutPath(cfg.oracle_model)))
                               : nlohmann::ordered_json(nullptr);
    a["traces"] = "traces.jsonl";
    a["transcripts"] = "transcripts.jsonl";
    a["report_json"] = "report.json";
    a["report_txt"] = "report.txt";
    a["report_csv"] = "report.csv";
    if (cfg.embedder.kind == "remote" && !cfg.embedder.cache.empty()) {
      a["embedding_cache"] = RelativeToOut(cfg, cfg.OutPath(cfg.embedder.cache));
    }
    m["artifacts"] = a;
    m["users"] = {{"sampled", data.sampled_users},
                  {"test", data.split.test.users.size()},
                  {"evaluated", run.traces.size()},
                  {"skipped", skipped},
                  {"truncated", report.users_truncated}};
    m["aborted"] = run.aborted ? nlohmann::ordered_json(*run.aborted)
                               : nlohmann::ordered_json(nullptr);
    WriteFile(cfg.OutPath("manifest.json"), m.dump(2) + "\n");

    out << RenderReportTable(report);
    if (run.aborted) {
      err << "error: run aborted, partial traces preserved: " << *run.aborted << "\n";
      return 1;
    }
    return 0;
  });
}

int CmdReplay(ExperimentConfig const& cfg, std::filesystem::path const& traces_path,
              std::filesystem::path const& out_dir, std::ostream& out, std::ostream& err) {
  return Guarded(err, [&] {
    ValidateConfig(cfg);
    if (!std::filesystem::exists(traces_path)) {
      throw ConfigError("trace file not found: " + traces_path.string());
    }
    auto const traces = ReadTraces(traces_path);
    auto const data = PrepareData(cfg, cfg.users);
    auto const provider = MakeEmbedder(cfg);
    ExampleEncoder const encoder(*provider, *data.dataset.items, data.dataset.scale);
    Catalog const catalog(data.dataset.items);
    std::optional<CriticModel> oracle;
    if (cfg.mode == EvalMode::kOracle) {
      oracle = LoadRequiredModel(cfg.OutPath(cfg.oracle_model), "build-oracle", *provider);
    }
    std::size_t skipped = 0;
    MakeEvalInstances(data.split.test, data.dataset, cfg, &skipped);

    RelevanceContext ctx;
    ctx.catalog = &catalog;
    ctx.oracle = oracle ? &*oracle : nullptr;
    ctx.oracle_encoder = &encoder;
    ctx.threshold = cfg.relevance_threshold;
    auto report = Aggregate(traces, cfg.mode, ctx, cfg.ns, skipped);
    auto const critic_path = cfg.OutPath(cfg.critic_model);
    if (std::filesystem::exists(critic_path)) {
      auto const critic = LoadRequiredModel(critic_path, "train-critic", *provider);
      report.critic = SummarizeCritic(cfg, data.split.test, critic, encoder);
    }
    WriteReport(report, out_dir);

    nlohmann::ordered_json m;
    m["version"] = kVersion;
    m["model_format"] = CriticModel::kFormatVersion;
    m["command"] = "replay";
    m["config_digest"] = ConfigDigest(cfg);
    m["created_at"] = UtcNow();
    m["artifacts"] = {{"traces", std::filesystem::absolute(traces_path).generic_string()},
                      {"report_json", "report.json"},
                      {"report_txt", "report.txt"},
                      {"report_csv", "report.csv"}};
    m["users"] = {{"evaluated", traces.size()},
                  {"skipped", skipped},
                  {"truncated", report.users_truncated}};
    m["aborted"] = nullptr;
    WriteFile(out_dir / "manifest.json", m.dump(2) + "\n");

    out << RenderReportTable(report);
    return 0;
  });
}

int CmdReport(std::vector<std::filesystem::path> const& run_dirs, std::ostream& out,
              std::ostream& err) {
  return Guarded(err, [&] {
    if (run_dirs.empty()) throw ConfigError("report needs at least one run directory");
    std::vector<LabeledReport> runs;
    for (auto const& dir : run_dirs) {
      auto const manifest_path = dir / "manifest.json";
      if (!std::filesystem::exists(manifest_path)) {
        throw Error("no run manifest in " + dir.string());
      }
      auto const manifest = nlohmann::json::parse(ReadFile(manifest_path));
      auto const report_path =
          dir / manifest.at("artifacts").at("report_json").get<std::string>();
      runs.push_back({dir.filename().string().empty() ? dir.string() : dir.filename().string(),
                      ReportFromJson(ReadFile(report_path))});
      if (!manifest.at("aborted").is_null()) {
        out << "note: run " << dir.string()
            << " was aborted: " << manifest.at("aborted").get<std::string>() << "\n";
      }
    }
    if (runs.size() == 1) {
      out << RenderReportTable(runs.front().report);
      return 0;
    }
    for (auto const& r : runs) {
      if (r.report.empty()) out << "run " << r.label << ": no successful users; report is empty\n";
    }
    out << RenderComparisonTable(runs);
    return 0;
  });
}

}  // namespace critiquerec
