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

#ifndef CRITIQUEREC_CRITIQUE_LOOP_HPP_
#define CRITIQUEREC_CRITIQUE_LOOP_HPP_

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "critiquerec/catalog.hpp"
#include "critiquerec/critic.hpp"
#include "critiquerec/feedback.hpp"
#include "critiquerec/llm_gateway.hpp"

namespace critiquerec {

struct LoopConfig {
  /// Refinement rounds; 0 is the initial list only (no critic).
  int loops = 1;
  std::size_t n = 10;
  /// A refinement that parses fewer than n * min_parse_fraction titles is
  /// discarded and the previous list carried forward.
  double min_parse_fraction = 0.5;
  std::string model;
  double temperature = 0.0;
  int max_tokens = 1024;
  PromptContext prompt;
};

struct TranscriptEntry {
  std::string request_id;
  std::string system;
  std::string prompt;
  std::string response;
  double latency_ms = 0.0;
};

struct LoopTrace {
  std::string user_id;
  /// Context the loop ran on; kept so metrics can be recomputed offline.
  EvalInstance instance;
  /// lists[0] is the initial list, lists[i] the list after refinement i.
  std::vector<RankedList> lists;
  /// feedback[i] scores lists[i] and drives refinement i + 1.
  std::vector<FeedbackReport> feedback;
  /// One record per backend call, calls[i] produced lists[i].
  std::vector<CallRecord> calls;
  int loops_executed = 0;
  bool truncated = false;
  std::string error;
  /// Refinement indices whose parse degraded below threshold.
  std::vector<int> carried_forward;
  /// Prompts and responses; persisted separately from the trace.
  std::vector<TranscriptEntry> transcript;
};

/// Critic verdicts for every entry in `recs`. Unresolvable titles are scored
/// through a transient item built from the raw title and marked synthetic.
FeedbackReport ScoreRecommendations(CriticModel const& critic, ExampleEncoder const& encoder,
                                    UserHistory const& history, RankedList const& recs,
                                    Catalog const& catalog, int loop_index);

/// Initial recommendation followed by `cfg.loops` rounds of
/// score -> refinement prompt -> parse. Backend failures truncate the trace
/// and leave it well-formed.
LoopTrace RunLoop(EvalInstance const& instance, LoopConfig const& cfg, LlmBackend& backend,
                  CriticModel const& critic, ExampleEncoder const& encoder,
                  Catalog const& catalog);

/// Transient item for a title the catalog does not know.
Item SyntheticItem(std::string_view raw_title);

std::string TraceToJsonLine(LoopTrace const& trace);
LoopTrace TraceFromJsonLine(std::string_view line);
std::string TranscriptToJsonLines(LoopTrace const& trace);

/// Reads a traces JSONL file; throws FormatError naming the bad line.
std::vector<LoopTrace> ReadTraces(std::filesystem::path const& path);

}  // namespace critiquerec

#endif  // CRITIQUEREC_CRITIQUE_LOOP_HPP_
