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

#include "critiquerec/llm_gateway.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <regex>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "critiquerec/embedder.hpp"
#include "critiquerec/error.hpp"
#include "critiquerec/random.hpp"
#include "critiquerec/title.hpp"
#include "json.hpp"

namespace critiquerec {
namespace {

std::string_view TrimView(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool StartsWith(std::string_view s, std::string_view prefix) {
  return s.substr(0, prefix.size()) == prefix;
}

void EraseAll(std::string& s, std::string_view what) {
  for (auto pos = s.find(what); pos != std::string::npos; pos = s.find(what, pos)) {
    s.erase(pos, what.size());
  }
}

// Strips "- ", "* ", "+ ", "• " bullets.
std::string_view StripBullets(std::string_view s) {
  for (;;) {
    s = TrimView(s);
    if (s.size() >= 2 && (s[0] == '-' || s[0] == '*' || s[0] == '+') && s[1] == ' ') {
      s.remove_prefix(2);
    } else if (StartsWith(s, "\xE2\x80\xA2")) {
      s.remove_prefix(3);
    } else {
      return s;
    }
  }
}

bool StartsWithDash(std::string_view s, std::size_t& width) {
  if (StartsWith(s, "-")) {
    width = 1;
    return true;
  }
  if (StartsWith(s, "\xE2\x80\x93") || StartsWith(s, "\xE2\x80\x94")) {  // en/em dash
    width = 3;
    return true;
  }
  return false;
}

// Position just past the last "(YYYY)" in s, or npos.
std::size_t EndOfLastYear(std::string_view s) {
  for (std::size_t i = s.size(); i >= 6; --i) {
    std::size_t const start = i - 6;
    if (s[start] == '(' && s[i - 1] == ')' &&
        std::all_of(s.begin() + static_cast<std::ptrdiff_t>(start + 1),
                    s.begin() + static_cast<std::ptrdiff_t>(i - 1),
                    [](char c) { return c >= '0' && c <= '9'; })) {
      return i;
    }
  }
  return std::string_view::npos;
}

// "Title (1999) - because ..." -> "Title (1999)". Without a year only a spaced em dash
// starts a comment.
std::string_view DropTrailingComment(std::string_view title) {
  auto const end = EndOfLastYear(title);
  if (end == std::string_view::npos) {
    auto const dash = title.find(" \xE2\x80\x94 ");
    return dash == std::string_view::npos ? title : TrimView(title.substr(0, dash));
  }
  if (end == title.size()) return title;
  auto rest = title.substr(end);
  auto const trimmed = TrimView(rest);
  std::size_t width = 0;
  if (StartsWithDash(trimmed, width) || StartsWith(trimmed, ":") || StartsWith(trimmed, ",")) {
    return TrimView(title.substr(0, end));
  }
  return title;
}

// Title wrapped in emphasis or quotes right after the rank, e.g.
// "**Dune** (1965) - because ...". Empty when the rest is not delimited.
std::string DelimitedTitle(std::string_view rest) {
  for (std::string_view d : {"**", "__", "`", "\""}) {
    if (!StartsWith(rest, d)) continue;
    auto const close = rest.find(d, d.size());
    if (close == std::string_view::npos || close == d.size()) return {};
    std::string title(TrimView(rest.substr(d.size(), close - d.size())));
    auto const after = TrimView(rest.substr(close + d.size()));
    if (EndOfLastYear(title) == std::string_view::npos && after.size() >= 6 &&
        EndOfLastYear(after.substr(0, 6)) == 6) {
      title += " " + std::string(after.substr(0, 6));
    }
    return title;
  }
  return {};
}

std::optional<std::string> ParseLine(std::string_view raw_line) {
  std::string_view s = StripBullets(raw_line);
  if (StartsWith(s, "**") || StartsWith(s, "__")) s = StripBullets(s.substr(2));

  std::size_t digits = 0;
  while (digits < s.size() && std::isdigit(static_cast<unsigned char>(s[digits]))) ++digits;
  if (digits == 0 || digits > 4) return std::nullopt;
  std::string_view rest = s.substr(digits);
  if (StartsWith(rest, "**") || StartsWith(rest, "__")) rest.remove_prefix(2);
  if (!rest.empty() && (rest[0] == '.' || rest[0] == ')')) {
    rest.remove_prefix(1);
  } else if (!rest.empty() && std::isspace(static_cast<unsigned char>(rest[0]))) {
    rest = TrimView(rest);
    std::size_t width = 0;
    if (StartsWithDash(rest, width)) rest.remove_prefix(width);
  } else {
    return std::nullopt;
  }
  rest = TrimView(rest);
  std::string title = DelimitedTitle(rest);
  if (title.empty()) {
    std::string plain(rest);
    EraseAll(plain, "**");
    EraseAll(plain, "__");
    EraseAll(plain, "`");
    std::string_view view = TrimView(plain);
    if (view.size() >= 2 && view.front() == '"' && view.back() == '"') {
      view = TrimView(view.substr(1, view.size() - 2));
    }
    title = std::string(DropTrailingComment(view));
  } else {
    EraseAll(title, "**");
    EraseAll(title, "__");
    EraseAll(title, "`");
  }
  if (TrimView(title).empty()) return std::nullopt;
  return std::string(TrimView(title));
}

std::string TitleKey(std::string_view title) {
  auto const nt = NormalizeTitle(title);
  return nt.canonical + "|" + (nt.year ? std::to_string(*nt.year) : std::string());
}

std::string Substitute(std::string text,
                       std::vector<std::pair<std::string, std::string>> const& values) {
  for (auto const& [key, value] : values) {
    std::string const needle = "{" + key + "}";
    for (auto pos = text.find(needle); pos != std::string::npos;
         pos = text.find(needle, pos + value.size())) {
      text.replace(pos, needle.size(), value);
    }
  }
  return text;
}

std::string Lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string_view ConsumedVerb(Schema schema) {
  switch (schema) {
    case Schema::kMovies: return "watched";
    case Schema::kBooks: return "read";
    case Schema::kGeneric: return "rated";
  }
  return "rated";
}

std::vector<std::pair<std::string, std::string>> Placeholders(PromptContext const& ctx,
                                                              std::size_t n) {
  auto const noun = std::string(SchemaNoun(ctx.schema));
  return {{"noun", noun},
          {"noun_lower", Lower(noun)},
          {"consumed", std::string(ConsumedVerb(ctx.schema))},
          {"n", std::to_string(n)},
          {"item_word", n == 1 ? "item" : "items"}};
}

std::string CandidateBlock(std::vector<Item const*> const& candidates, PromptContext const& ctx,
                           std::vector<std::pair<std::string, std::string>> const& values) {
  std::string out = Substitute(ctx.templates.candidate_header, values) + "\n";
  for (auto const* item : candidates) out += "- " + item->title + "\n";
  return out;
}

std::string RequestId(std::string_view kind, std::string_view user_text) {
  std::ostringstream os;
  os << kind << "-" << std::hex << Fnv1a64(user_text);
  return os.str();
}

}  // namespace

ParsedList ParseRankedList(std::string_view text, std::size_t n) {
  ParsedList out;
  std::unordered_set<std::string> seen;
  std::size_t pos = 0;
  while (pos <= text.size() && out.list.entries.size() < n) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    auto title = ParseLine(text.substr(pos, end - pos));
    pos = end + 1;
    if (!title) continue;
    auto const key = TitleKey(*title);
    if (key.front() == '|' || !seen.insert(key).second) continue;
    out.list.entries.push_back(
        RankedEntry{static_cast<int>(out.list.entries.size()) + 1, std::move(*title)});
  }
  if (out.list.entries.empty()) {
    throw ParseError("no numbered recommendations found in model output");
  }
  out.degraded = out.list.entries.size() < n;
  return out;
}

std::string RenderRankedList(RankedList const& list) {
  std::string out;
  for (auto const& e : list.entries) {
    if (!out.empty()) out += '\n';
    out += std::to_string(e.rank) + ". " + e.raw_title;
  }
  return out;
}

void ChatRequest::Validate() const {
  if (user.empty()) throw ConfigError("chat request has empty user text");
  if (!(temperature >= 0.0 && temperature <= 2.0)) {
    throw ConfigError("temperature must be within [0, 2]");
  }
}

std::string RenderHistory(UserHistory const& history, PromptContext const& ctx) {
  if (ctx.items == nullptr) throw ConfigError("prompt context has no item table");
  std::string out = "[";
  bool first = true;
  for (auto const& inter : history.interactions) {
    auto const& item = ctx.items->At(inter.item_id);
    if (!first) out += ",\n";
    first = false;
    out += "{\"title\": " + nlohmann::json(item.title).dump();
    if (item.year) out += ", \"year\": \"" + std::to_string(*item.year) + "\"";
    for (auto const& [key, value] : item.attributes) {
      out += ", " + nlohmann::json(key).dump() + ": " + nlohmann::json(value).dump();
    }
    out += ", \"rating\": \"" + RatingScale::Format(inter.rating) + "\"}";
  }
  out += "]";
  return out;
}

std::string RenderFeedbackLine(FeedbackEntry const& entry, RatingScale const& scale) {
  return entry.raw_title + " \xE2\x80\x94 estimated rating " +
         RatingScale::Format(entry.score.estimated_rating) + "/" +
         RatingScale::Format(scale.max_rating());
}

ChatRequest BuildInitialPrompt(UserHistory const& history, std::size_t n,
                               std::vector<Item const*> const* candidates,
                               PromptContext const& ctx) {
  if (n < 1) throw ConfigError("must request at least one recommendation");
  auto const values = Placeholders(ctx, n);
  std::string user = Substitute(ctx.templates.history_header, values) + "\n" +
                     RenderHistory(history, ctx) + "\n\n";
  std::string instruction = Substitute(ctx.templates.initial_instruction, values);
  if (candidates != nullptr) {
    user += CandidateBlock(*candidates, ctx, values) + "\n";
    instruction += " " + Substitute(ctx.templates.candidate_instruction, values);
  }
  user += instruction + "\n" + Substitute(ctx.templates.format_instruction, values);

  ChatRequest req;
  req.system = Substitute(ctx.templates.system, values);
  req.user = std::move(user);
  req.request_id = RequestId("init", req.user);
  req.expected_count = static_cast<int>(n);
  return req;
}

ChatRequest BuildRefinementPrompt(UserHistory const& history, RankedList const& previous,
                                  FeedbackReport const& feedback, std::size_t n,
                                  PromptContext const& ctx,
                                  std::vector<Item const*> const* candidates) {
  if (previous.empty()) throw Error("refinement needs a non-empty previous list");
  if (feedback.entries.size() != previous.entries.size()) {
    throw Error("feedback covers " + std::to_string(feedback.entries.size()) +
                " entries but the previous list has " + std::to_string(previous.size()));
  }
  for (std::size_t i = 0; i < previous.entries.size(); ++i) {
    if (feedback.entries[i].raw_title != previous.entries[i].raw_title) {
      throw Error("feedback entry " + std::to_string(i + 1) + " ('" +
                  feedback.entries[i].raw_title + "') does not match list entry '" +
                  previous.entries[i].raw_title + "'");
    }
  }
  auto const values = Placeholders(ctx, n);
  std::string user = Substitute(ctx.templates.history_header, values) + "\n" +
                     RenderHistory(history, ctx) + "\n\n";
  std::string instruction = Substitute(ctx.templates.refinement_instruction, values);
  if (candidates != nullptr) {
    user += CandidateBlock(*candidates, ctx, values) + "\n";
    instruction += " " + Substitute(ctx.templates.candidate_instruction, values);
  }
  user += Substitute(ctx.templates.feedback_header, values) + "\n";
  for (std::size_t i = 0; i < feedback.entries.size(); ++i) {
    user += std::to_string(i + 1) + ". " + RenderFeedbackLine(feedback.entries[i], ctx.scale) +
            "\n";
  }
  user += "\n" + instruction + "\n" + Substitute(ctx.templates.format_instruction, values);

  ChatRequest req;
  req.system = Substitute(ctx.templates.system, values);
  req.user = std::move(user);
  req.request_id = RequestId("refine" + std::to_string(feedback.loop_index), req.user);
  req.expected_count = static_cast<int>(n);
  return req;
}

std::string_view OutcomeName(CallOutcome outcome) {
  switch (outcome) {
    case CallOutcome::kOk: return "ok";
    case CallOutcome::kParseDegraded: return "parse_degraded";
    case CallOutcome::kError: return "error";
  }
  return "error";
}

std::optional<CallOutcome> ParseOutcome(std::string_view name) {
  if (name == "ok") return CallOutcome::kOk;
  if (name == "parse_degraded") return CallOutcome::kParseDegraded;
  if (name == "error") return CallOutcome::kError;
  return std::nullopt;
}

void CallLog::Append(CallRecord record) {
  std::lock_guard lock(mu_);
  records_.push_back(std::move(record));
}

std::vector<CallRecord> CallLog::Snapshot() const {
  std::lock_guard lock(mu_);
  return records_;
}

std::size_t CallLog::size() const {
  std::lock_guard lock(mu_);
  return records_.size();
}

// ---------------------------------------------------------------------------
// Mock backend

MockLlmBackend::MockLlmBackend(MockBackendConfig config) : config_(std::move(config)) {
  for (auto const& e : config_.catalog) max_popularity_ = std::max(max_popularity_, e.popularity);
}

std::vector<MockLlmBackend::FeedbackLine> MockLlmBackend::ParseFeedback(std::string_view text) {
  static std::regex const kLine(
      R"(^\s*(\d+)\.\s+(.*\S)\s+\xE2\x80\x94\s+estimated rating\s+([0-9.]+)/([0-9.]+)\s*$)");
  std::vector<FeedbackLine> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string const line(text.substr(pos, end - pos));
    pos = end + 1;
    std::smatch m;
    if (std::regex_match(line, m, kLine)) {
      out.push_back({std::stoi(m[1]), m[2], std::stod(m[3]), std::stod(m[4])});
    }
  }
  return out;
}

namespace {

std::set<std::string> HistoryTitleKeys(std::string_view text) {
  static std::regex const kTitle(R"re(\{"title": ("(?:[^"\\]|\\.)*"))re");
  std::set<std::string> keys;
  std::string const s(text);
  for (auto it = std::sregex_iterator(s.begin(), s.end(), kTitle); it != std::sregex_iterator();
       ++it) {
    try {
      keys.insert(TitleKey(nlohmann::json::parse((*it)[1].str()).get<std::string>()));
    } catch (std::exception const&) {
      // Not a JSON string literal; ignore.
    }
  }
  return keys;
}

std::set<std::string> CandidateTitleKeys(std::string_view text) {
  std::set<std::string> keys;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    auto const line = text.substr(pos, end - pos);
    pos = end + 1;
    if (StartsWith(line, "- ")) keys.insert(TitleKey(TrimView(line.substr(2))));
  }
  return keys;
}

std::set<std::string> WordSet(std::string_view title) {
  auto const nt = NormalizeTitle(title);
  std::set<std::string> words;
  std::istringstream in(nt.canonical);
  for (std::string w; in >> w;) words.insert(w);
  return words;
}

double Jaccard(std::set<std::string> const& a, std::set<std::string> const& b) {
  if (a.empty() || b.empty()) return 0.0;
  std::size_t shared = 0;
  for (auto const& w : a) shared += b.count(w);
  return static_cast<double>(shared) / static_cast<double>(a.size() + b.size() - shared);
}

}  // namespace

Completion MockLlmBackend::Complete(ChatRequest const& request) {
  Completion c;
  c.record.request_id = request.request_id;
  std::size_t const n = request.expected_count > 0 ? static_cast<std::size_t>(request.expected_count)
                                                   : 10;
  auto const history = HistoryTitleKeys(request.user);
  auto const candidates = CandidateTitleKeys(request.user);
  auto const feedback = ParseFeedback(request.user);

  struct Scored {
    std::size_t index;
    std::string key;
    double score;
  };
  Rng rng(DeriveSeed(config_.seed, request.user));
  std::vector<Scored> eligible;
  for (std::size_t i = 0; i < config_.catalog.size(); ++i) {
    auto const& entry = config_.catalog[i];
    double const pop = max_popularity_ > 0.0 ? entry.popularity / max_popularity_ : 0.0;
    double const score = pop + config_.noise * rng.Normal();
    auto key = TitleKey(entry.title);
    if (history.contains(key)) continue;
    if (!candidates.empty() && !candidates.contains(key)) continue;
    eligible.push_back({i, std::move(key), score});
  }
  auto by_score = [](Scored const& a, Scored const& b) {
    return a.score != b.score ? a.score > b.score : a.index < b.index;
  };

  RankedList out;
  auto emit = [&](std::string title) {
    out.entries.push_back({static_cast<int>(out.entries.size()) + 1, std::move(title)});
  };

  if (feedback.empty()) {
    std::sort(eligible.begin(), eligible.end(), by_score);
    for (std::size_t i = 0; i < eligible.size() && out.size() < n; ++i) {
      emit(config_.catalog[eligible[i].index].title);
    }
  } else {
    std::vector<FeedbackLine> retained;
    std::set<std::string> judged;
    for (auto const& line : feedback) {
      judged.insert(TitleKey(line.title));
      if (line.max_rating > 0.0 && line.estimate / line.max_rating >= config_.keep_fraction) {
        retained.push_back(line);
      }
    }
    std::stable_sort(retained.begin(), retained.end(),
                     [](auto const& a, auto const& b) { return a.estimate > b.estimate; });
    for (auto const& r : retained) {
      if (out.size() < n) emit(r.title);
    }

    std::vector<std::pair<std::set<std::string>, double>> anchors;
    for (auto const& r : retained) anchors.emplace_back(WordSet(r.title), r.estimate / r.max_rating);
    std::vector<std::pair<double, Scored>> replacements;
    for (auto const& e : eligible) {
      if (judged.contains(e.key)) continue;
      auto const words = WordSet(config_.catalog[e.index].title);
      double sim = 0.0;
      for (auto const& [anchor, weight] : anchors) sim += weight * Jaccard(words, anchor);
      replacements.emplace_back(sim, e);
    }
    std::sort(replacements.begin(), replacements.end(), [&](auto const& a, auto const& b) {
      return a.first != b.first ? a.first > b.first : by_score(a.second, b.second);
    });
    for (std::size_t i = 0; i < replacements.size() && out.size() < n; ++i) {
      emit(config_.catalog[replacements[i].second.index].title);
    }
  }

  c.text = RenderRankedList(out);
  int const prompt_tokens = static_cast<int>(Tokenize(request.system).size() +
                                             Tokenize(request.user).size());
  int const completion_tokens = static_cast<int>(Tokenize(c.text).size());
  c.record.prompt_tokens = prompt_tokens;
  c.record.completion_tokens = completion_tokens;
  c.record.latency_ms = config_.latency_base_ms +
                        config_.latency_per_token_ms * (prompt_tokens + completion_tokens);
  if (c.text.empty()) {
    c.error = "mock catalog has no eligible titles";
    c.record.outcome = CallOutcome::kError;
  }
  Record(c.record);
  return c;
}

// ---------------------------------------------------------------------------
// Remote backend

RemoteLlmBackend::RemoteLlmBackend(RemoteBackendConfig config)
    : config_(std::move(config)), endpoint_(HttpEndpoint::Parse(config_.url)) {
  if (config_.max_in_flight < 1) config_.max_in_flight = 1;
}

Completion RemoteLlmBackend::Complete(ChatRequest const& request) {
  Completion c;
  c.record.request_id = request.request_id;
  c.record.outcome = CallOutcome::kError;
  try {
    request.Validate();
  } catch (std::exception const& e) {
    c.error = e.what();
    Record(c.record);
    return c;
  }

  nlohmann::json body;
  body["model"] = request.model.empty() ? config_.model : request.model;
  body["messages"] = nlohmann::json::array();
  if (!request.system.empty()) {
    body["messages"].push_back({{"role", "system"}, {"content", request.system}});
  }
  body["messages"].push_back({{"role", "user"}, {"content", request.user}});
  body["temperature"] = request.temperature;
  body["max_tokens"] = request.max_tokens;

  {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return in_flight_ < config_.max_in_flight; });
    ++in_flight_;
  }
  auto const start = std::chrono::steady_clock::now();
  auto const res = PostJsonWithRetry(endpoint_, body.dump(), config_.token, config_.retry,
                                     config_.timeout);
  auto const stop = std::chrono::steady_clock::now();
  {
    std::lock_guard lock(mu_);
    --in_flight_;
  }
  cv_.notify_one();
  c.record.latency_ms = std::chrono::duration<double, std::milli>(stop - start).count();

  if (!res.ok()) {
    c.error = "chat completion failed: " + res.error;
  } else {
    try {
      auto const reply = nlohmann::json::parse(res.body);
      auto const& content = reply.at("choices").at(0).at("message").at("content");
      c.text = content.is_string() ? content.get<std::string>() : std::string();
      if (auto it = reply.find("usage"); it != reply.end() && it->is_object()) {
        if (it->contains("prompt_tokens")) c.record.prompt_tokens = it->at("prompt_tokens").get<int>();
        if (it->contains("completion_tokens")) {
          c.record.completion_tokens = it->at("completion_tokens").get<int>();
        }
      }
      if (TrimView(c.text).empty()) {
        c.error = "chat completion returned an empty response";
      } else {
        c.record.outcome = CallOutcome::kOk;
      }
    } catch (std::exception const& e) {
      c.error = std::string("malformed chat completion response: ") + e.what();
    }
  }
  Record(c.record);
  return c;
}

}  // namespace critiquerec
