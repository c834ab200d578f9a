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

#include "critiquerec/critique_loop.hpp"

#include <cmath>
#include <fstream>

#include "critiquerec/error.hpp"
#include "json.hpp"

namespace critiquerec {

Item SyntheticItem(std::string_view raw_title) {
  Item item;
  item.item_id = "synthetic:" + std::string(raw_title);
  item.title = std::string(raw_title);
  return item;
}

FeedbackReport ScoreRecommendations(CriticModel const& critic, ExampleEncoder const& encoder,
                                    UserHistory const& history, RankedList const& recs,
                                    Catalog const& catalog, int loop_index) {
  if (history.interactions.empty()) throw Error("cannot score recommendations without history");
  critic.CheckProvider(encoder.provider());
  auto const encoded_history = encoder.EncodeHistory(history);

  FeedbackReport report;
  report.loop_index = loop_index;
  for (auto const& entry : recs.entries) {
    FeedbackEntry fe;
    fe.rank = entry.rank;
    fe.raw_title = entry.raw_title;
    auto const res = catalog.Resolve(entry.raw_title);
    fe.match = res.kind;
    Item const synthetic = SyntheticItem(entry.raw_title);
    Item const& item = res.item != nullptr ? *res.item : synthetic;
    if (res.item != nullptr) {
      fe.item_id = res.item->item_id;
    } else {
      fe.synthetic = true;
    }
    EncodedExample ex{encoded_history, encoder.EncodeItem(item), -1};
    fe.score = critic.ScoreFromDistribution(item.item_id, critic.Distribution(ex));
    report.entries.push_back(std::move(fe));
  }
  return report;
}

namespace {

std::vector<Item const*> CandidateItems(EvalInstance const& instance, Catalog const& catalog) {
  std::vector<Item const*> items;
  for (auto const& id : *instance.candidate_ids) items.push_back(&catalog.items().At(id));
  return items;
}

}  // namespace

LoopTrace RunLoop(EvalInstance const& instance, LoopConfig const& cfg, LlmBackend& backend,
                  CriticModel const& critic, ExampleEncoder const& encoder,
                  Catalog const& catalog) {
  if (cfg.loops < 0) throw ConfigError("loop count must be >= 0");
  if (instance.history.interactions.empty()) throw Error("critique loop needs a history");

  LoopTrace trace;
  trace.user_id = instance.user_id;
  trace.instance = instance;

  std::vector<Item const*> candidates;
  if (instance.candidate_ids) candidates = CandidateItems(instance, catalog);
  auto const* cand_ptr = instance.candidate_ids ? &candidates : nullptr;

  auto call = [&](ChatRequest req) -> std::optional<ParsedList> {
    req.model = cfg.model;
    req.temperature = cfg.temperature;
    req.max_tokens = cfg.max_tokens;
    auto completion = backend.Complete(req);
    trace.transcript.push_back({req.request_id, req.system, req.user, completion.text,
                                completion.record.latency_ms});
    trace.calls.push_back(completion.record);
    if (!completion.ok()) {
      trace.calls.back().outcome = CallOutcome::kError;
      trace.truncated = true;
      trace.error = completion.error;
      return std::nullopt;
    }
    try {
      auto parsed = ParseRankedList(completion.text, cfg.n);
      if (parsed.degraded) trace.calls.back().outcome = CallOutcome::kParseDegraded;
      return parsed;
    } catch (ParseError const& e) {
      trace.calls.back().outcome = CallOutcome::kParseDegraded;
      return ParsedList{};
    }
  };

  auto initial = call(BuildInitialPrompt(instance.history, cfg.n, cand_ptr, cfg.prompt));
  if (!initial) return trace;
  if (initial->list.empty()) {
    trace.calls.back().outcome = CallOutcome::kError;
    trace.truncated = true;
    trace.error = "initial response contained no numbered recommendations";
    return trace;
  }
  initial->list.refinement = 0;
  trace.lists.push_back(std::move(initial->list));

  auto const min_entries = static_cast<std::size_t>(
      std::ceil(static_cast<double>(cfg.n) * cfg.min_parse_fraction));
  for (int loop = 0; loop < cfg.loops; ++loop) {
    auto const& previous = trace.lists.back();
    trace.feedback.push_back(
        ScoreRecommendations(critic, encoder, instance.history, previous, catalog, loop));
    auto refined = call(BuildRefinementPrompt(instance.history, previous, trace.feedback.back(),
                                              cfg.n, cfg.prompt, cand_ptr));
    if (!refined) return trace;
    RankedList next;
    if (refined->list.size() < min_entries) {
      next = trace.lists.back();
      trace.carried_forward.push_back(loop + 1);
    } else {
      next = std::move(refined->list);
    }
    next.refinement = loop + 1;
    trace.lists.push_back(std::move(next));
    trace.loops_executed = loop + 1;
  }
  return trace;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

using json = nlohmann::ordered_json;

std::string_view MatchName(MatchKind kind) {
  switch (kind) {
    case MatchKind::kExact: return "exact";
    case MatchKind::kFuzzy: return "fuzzy";
    case MatchKind::kUnresolved: return "unresolved";
  }
  return "unresolved";
}

MatchKind MatchFromName(std::string const& name) {
  if (name == "exact") return MatchKind::kExact;
  if (name == "fuzzy") return MatchKind::kFuzzy;
  if (name == "unresolved") return MatchKind::kUnresolved;
  throw FormatError("unknown match kind '" + name + "'");
}

json InteractionsToJson(std::vector<Interaction> const& v) {
  auto arr = json::array();
  for (auto const& i : v) arr.push_back({i.item_id, i.rating});
  return arr;
}

std::vector<Interaction> InteractionsFromJson(json const& arr) {
  std::vector<Interaction> v;
  for (auto const& i : arr) v.push_back({i.at(0).get<std::string>(), i.at(1).get<double>()});
  return v;
}

}  // namespace

std::string TraceToJsonLine(LoopTrace const& t) {
  json j;
  j["user_id"] = t.user_id;
  json inst;
  inst["history"] = InteractionsToJson(t.instance.history.interactions);
  inst["held_out"] = InteractionsToJson(t.instance.held_out);
  inst["candidates"] = t.instance.candidate_ids ? json(*t.instance.candidate_ids) : json(nullptr);
  j["instance"] = inst;

  auto lists = json::array();
  for (auto const& l : t.lists) {
    auto titles = json::array();
    for (auto const& e : l.entries) titles.push_back(e.raw_title);
    lists.push_back({{"refinement", l.refinement}, {"titles", titles}});
  }
  j["lists"] = lists;

  auto feedback = json::array();
  for (auto const& f : t.feedback) {
    auto entries = json::array();
    for (auto const& e : f.entries) {
      entries.push_back({{"rank", e.rank},
                         {"title", e.raw_title},
                         {"match", MatchName(e.match)},
                         {"item_id", e.item_id},
                         {"synthetic", e.synthetic},
                         {"level", e.score.estimated_level},
                         {"rating", e.score.estimated_rating},
                         {"distribution", e.score.distribution}});
    }
    feedback.push_back({{"loop", f.loop_index}, {"entries", entries}});
  }
  j["feedback"] = feedback;

  auto calls = json::array();
  for (auto const& c : t.calls) {
    json r = {{"request_id", c.request_id},
              {"latency_ms", c.latency_ms},
              {"outcome", OutcomeName(c.outcome)}};
    r["prompt_tokens"] = c.prompt_tokens ? json(*c.prompt_tokens) : json(nullptr);
    r["completion_tokens"] = c.completion_tokens ? json(*c.completion_tokens) : json(nullptr);
    calls.push_back(r);
  }
  j["calls"] = calls;
  j["loops_executed"] = t.loops_executed;
  j["truncated"] = t.truncated;
  j["error"] = t.error;
  j["carried_forward"] = t.carried_forward;
  return j.dump();
}

LoopTrace TraceFromJsonLine(std::string_view line) {
  auto const j = json::parse(line);
  LoopTrace t;
  t.user_id = j.at("user_id").get<std::string>();
  auto const& inst = j.at("instance");
  t.instance.user_id = t.user_id;
  t.instance.history.user_id = t.user_id;
  t.instance.history.interactions = InteractionsFromJson(inst.at("history"));
  t.instance.held_out = InteractionsFromJson(inst.at("held_out"));
  if (!inst.at("candidates").is_null()) {
    t.instance.candidate_ids = inst.at("candidates").get<std::vector<std::string>>();
  }
  for (auto const& l : j.at("lists")) {
    RankedList list;
    list.refinement = l.at("refinement").get<int>();
    for (auto const& title : l.at("titles")) {
      list.entries.push_back({static_cast<int>(list.entries.size()) + 1, title.get<std::string>()});
    }
    t.lists.push_back(std::move(list));
  }
  for (auto const& f : j.at("feedback")) {
    FeedbackReport report;
    report.loop_index = f.at("loop").get<int>();
    for (auto const& e : f.at("entries")) {
      FeedbackEntry fe;
      fe.rank = e.at("rank").get<int>();
      fe.raw_title = e.at("title").get<std::string>();
      fe.match = MatchFromName(e.at("match").get<std::string>());
      fe.item_id = e.at("item_id").get<std::string>();
      fe.synthetic = e.at("synthetic").get<bool>();
      fe.score.item_id = fe.item_id.empty() ? SyntheticItem(fe.raw_title).item_id : fe.item_id;
      fe.score.estimated_level = e.at("level").get<int>();
      fe.score.estimated_rating = e.at("rating").get<double>();
      fe.score.distribution = e.at("distribution").get<std::vector<double>>();
      report.entries.push_back(std::move(fe));
    }
    t.feedback.push_back(std::move(report));
  }
  for (auto const& c : j.at("calls")) {
    CallRecord r;
    r.request_id = c.at("request_id").get<std::string>();
    r.latency_ms = c.at("latency_ms").get<double>();
    auto const outcome = ParseOutcome(c.at("outcome").get<std::string>());
    if (!outcome) throw FormatError("unknown call outcome");
    r.outcome = *outcome;
    if (!c.at("prompt_tokens").is_null()) r.prompt_tokens = c.at("prompt_tokens").get<int>();
    if (!c.at("completion_tokens").is_null()) {
      r.completion_tokens = c.at("completion_tokens").get<int>();
    }
    t.calls.push_back(std::move(r));
  }
  t.loops_executed = j.at("loops_executed").get<int>();
  t.truncated = j.at("truncated").get<bool>();
  t.error = j.at("error").get<std::string>();
  t.carried_forward = j.at("carried_forward").get<std::vector<int>>();
  return t;
}

std::string TranscriptToJsonLines(LoopTrace const& trace) {
  std::string out;
  for (auto const& e : trace.transcript) {
    json j = {{"user_id", trace.user_id},   {"request_id", e.request_id},
              {"system", e.system},         {"prompt", e.prompt},
              {"response", e.response},     {"latency_ms", e.latency_ms}};
    out += j.dump() + "\n";
  }
  return out;
}

std::vector<LoopTrace> ReadTraces(std::filesystem::path const& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot read trace file " + path.string());
  std::vector<LoopTrace> traces;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      traces.push_back(TraceFromJsonLine(line));
    } catch (std::exception const& e) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) +
                        ": invalid trace record: " + e.what());
    }
  }
  return traces;
}

}  // namespace critiquerec
