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

#ifndef CRITIQUEREC_LLM_GATEWAY_HPP_
#define CRITIQUEREC_LLM_GATEWAY_HPP_

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "critiquerec/catalog.hpp"
#include "critiquerec/feedback.hpp"
#include "critiquerec/http.hpp"

namespace critiquerec {

// ---------------------------------------------------------------------------
// Ranked lists

struct RankedEntry {
  int rank = 0;  // 1-based
  std::string raw_title;

  friend bool operator==(RankedEntry const&, RankedEntry const&) = default;
};

struct RankedList {
  std::vector<RankedEntry> entries;
  /// 0 for the initial list, i for the output of the i-th refinement.
  int refinement = 0;

  bool empty() const { return entries.empty(); }
  std::size_t size() const { return entries.size(); }
  friend bool operator==(RankedList const&, RankedList const&) = default;
};

struct ParsedList {
  RankedList list;
  /// Fewer than the requested number of titles were found.
  bool degraded = false;
};

/// Parses numbered lines ("k", "k.", "k)", "k -" prefixes; markdown bullets
/// and emphasis are stripped). Keeps the first `n` titles that are unique
/// after normalization and renumbers them 1..m. Throws ParseError when no
/// line parses.
ParsedList ParseRankedList(std::string_view text, std::size_t n);

/// Canonical "rank. Title" lines joined by '\n'.
std::string RenderRankedList(RankedList const& list);

// ---------------------------------------------------------------------------
// Prompts

/// Prompt wording. Placeholders: {noun} (e.g. "Movies"), {noun_lower},
/// {consumed} ("watched", "read", "rated"), {n}, {item_word} ("item" or
/// "items").
struct PromptTemplates {
  std::string system =
      "You are a recommender system. You recommend items that a user is likely to rate "
      "highly, judging from the items the user has already rated.";
  std::string history_header = "{noun} {consumed} and rated by the user:";
  std::string candidate_header = "Candidate {noun_lower}:";
  std::string initial_instruction =
      "Recommend exactly {n} {item_word} that the user has not {consumed} yet and is likely "
      "to rate highly.";
  std::string candidate_instruction =
      "Choose only from the candidate {noun_lower} listed above.";
  std::string feedback_header =
      "Your previous recommendations, each with the rating this user is estimated to give "
      "it by a collaborative-filtering critic trained on the ratings of many users:";
  std::string refinement_instruction =
      "Produce an improved list of exactly {n} {item_word}. Keep items with high estimated "
      "ratings near the top and replace items with low estimated ratings by better choices.";
  std::string format_instruction =
      "Answer with a numbered list of exactly {n} {item_word}, one per line, in the format "
      "\"rank. Title (Year)\", and nothing else.";
};

struct ChatRequest {
  std::string system;
  std::string user;
  std::string model;
  double temperature = 0.0;
  int max_tokens = 1024;
  std::string request_id;
  /// Number of items requested; informational for remote backends.
  int expected_count = 0;

  /// Throws ConfigError unless user text is non-empty and temperature is in [0, 2].
  void Validate() const;
};

struct PromptContext {
  Schema schema = Schema::kMovies;
  ItemTable const* items = nullptr;
  RatingScale scale = RatingScale::Movies();
  PromptTemplates templates;
};

/// One JSON object per interaction, in the record layout
/// {"title": ..., <attributes>..., "rating": "4.0"}.
std::string RenderHistory(UserHistory const& history, PromptContext const& ctx);

/// "Title — estimated rating 4.0/5.0".
std::string RenderFeedbackLine(FeedbackEntry const& entry, RatingScale const& scale);

ChatRequest BuildInitialPrompt(UserHistory const& history, std::size_t n,
                               std::vector<Item const*> const* candidates,
                               PromptContext const& ctx);

/// Throws Error when `feedback` does not cover `previous` entry by entry.
ChatRequest BuildRefinementPrompt(UserHistory const& history, RankedList const& previous,
                                  FeedbackReport const& feedback, std::size_t n,
                                  PromptContext const& ctx,
                                  std::vector<Item const*> const* candidates = nullptr);

// ---------------------------------------------------------------------------
// Backends

enum class CallOutcome { kOk, kParseDegraded, kError };

std::string_view OutcomeName(CallOutcome outcome);
std::optional<CallOutcome> ParseOutcome(std::string_view name);

struct CallRecord {
  std::string request_id;
  double latency_ms = 0.0;
  std::optional<int> prompt_tokens;
  std::optional<int> completion_tokens;
  CallOutcome outcome = CallOutcome::kOk;
};

struct Completion {
  std::string text;
  CallRecord record;
  std::string error;  // empty on success

  bool ok() const { return error.empty(); }
};

/// Serialized sink for call records shared across concurrent loops.
class CallLog {
 public:
  void Append(CallRecord record);
  std::vector<CallRecord> Snapshot() const;
  std::size_t size() const;

 private:
  mutable std::mutex mu_;
  std::vector<CallRecord> records_;
};

class LlmBackend {
 public:
  virtual ~LlmBackend() = default;
  virtual std::string_view kind() const = 0;
  /// Never throws for transport problems; failures come back in
  /// Completion::error with outcome kError.
  virtual Completion Complete(ChatRequest const& request) = 0;

  /// Every Complete call appends exactly one record here when set.
  void set_call_log(std::shared_ptr<CallLog> log) { call_log_ = std::move(log); }

 protected:
  void Record(CallRecord const& record) const {
    if (call_log_) call_log_->Append(record);
  }

 private:
  std::shared_ptr<CallLog> call_log_;
};

struct MockCatalogEntry {
  std::string title;
  double popularity = 0.0;
};

struct MockBackendConfig {
  std::uint64_t seed = 9;
  std::vector<MockCatalogEntry> catalog;
  /// Standard deviation of the per-request noise added to normalized popularity.
  double noise = 0.3;
  /// Titles whose estimate / max rating falls below this are replaced.
  double keep_fraction = 0.7;
  /// Simulated latency = base + per_token * (prompt + completion tokens).
  double latency_base_ms = 400.0;
  double latency_per_token_ms = 0.25;
  PromptTemplates templates;
};

/// Deterministic stand-in for a chat model. Initial requests get the
/// most popular eligible titles after seeded noise; requests carrying critic
/// feedback get the retained titles re-ranked by estimate followed by
/// replacements most similar to what was kept.
class MockLlmBackend final : public LlmBackend {
 public:
  explicit MockLlmBackend(MockBackendConfig config);

  std::string_view kind() const override { return "mock"; }
  Completion Complete(ChatRequest const& request) override;

  struct FeedbackLine {
    int rank = 0;
    std::string title;
    double estimate = 0.0;
    double max_rating = 0.0;
  };
  /// Feedback lines found in a prompt, in order.
  static std::vector<FeedbackLine> ParseFeedback(std::string_view text);

 private:
  MockBackendConfig config_;
  double max_popularity_ = 0.0;
};

struct RemoteBackendConfig {
  std::string url = "https://api.openai.com/v1/chat/completions";
  std::string model;
  std::string token;
  RetryPolicy retry;
  std::chrono::seconds timeout{120};
  int max_in_flight = 4;
};

/// Chat-completions over HTTP(S): POST {model, messages, temperature,
/// max_tokens}, reply text from choices[0].message.content.
class RemoteLlmBackend final : public LlmBackend {
 public:
  explicit RemoteLlmBackend(RemoteBackendConfig config);

  std::string_view kind() const override { return "remote"; }
  Completion Complete(ChatRequest const& request) override;

 private:
  RemoteBackendConfig config_;
  HttpEndpoint endpoint_;
  std::mutex mu_;
  std::condition_variable cv_;
  int in_flight_ = 0;
};

}  // namespace critiquerec

#endif  // CRITIQUEREC_LLM_GATEWAY_HPP_
