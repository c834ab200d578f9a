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

#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "critiquerec/error.hpp"
#include "critiquerec/llm_gateway.hpp"
#include "critiquerec/random.hpp"
#include "critiquerec/title.hpp"
#include "fixtures.hpp"
#include "parser_corpus.hpp"

namespace critiquerec {
namespace {

std::vector<std::string> Titles(RankedList const& list) {
  std::vector<std::string> out;
  for (auto const& e : list.entries) out.push_back(e.raw_title);
  return out;
}

TEST(ParseRankedList, BareNumbers) {
  auto p = ParseRankedList("1 Jurassic Park (1993)\n2 Gladiator (2000)", 2);
  EXPECT_EQ(Titles(p.list), (std::vector<std::string>{"Jurassic Park (1993)", "Gladiator (2000)"}));
  EXPECT_EQ(p.list.entries[0].rank, 1);
  EXPECT_EQ(p.list.entries[1].rank, 2);
  EXPECT_FALSE(p.degraded);
}

TEST(ParseRankedList, MixedPrefixes) {
  auto p = ParseRankedList("1. A\n2) B\n3 - C", 10);
  EXPECT_EQ(Titles(p.list), (std::vector<std::string>{"A", "B", "C"}));
  EXPECT_TRUE(p.degraded);
}

TEST(ParseRankedList, NoListThrows) {
  EXPECT_THROW(ParseRankedList("no recommendations available", 10), ParseError);
  EXPECT_THROW(ParseRankedList("", 10), ParseError);
}

TEST(ParseRankedList, DuplicatesAndLimit) {
  auto p = ParseRankedList("1. Heat (1995)\n2. heat (1995)\n3. Alien (1979)\n4. Fargo (1996)", 2);
  EXPECT_EQ(Titles(p.list), (std::vector<std::string>{"Heat (1995)", "Alien (1979)"}));
  EXPECT_EQ(p.list.entries[1].rank, 2);
}

TEST(ParseRankedList, SameTitleDifferentYearsAreDistinct) {
  auto p = ParseRankedList("1. Dune (1984)\n2. Dune (2021)", 5);
  EXPECT_EQ(p.list.size(), 2u);
}

TEST(ParseRankedList, DelimitedTitleKeepsYearAfterMarkup) {
  auto p = ParseRankedList("1. **Dune** (1984) - a desert epic", 1);
  EXPECT_EQ(Titles(p.list), std::vector<std::string>{"Dune (1984)"});
}

TEST(ParseRankedList, DashInsideTitleIsKept) {
  auto p = ParseRankedList("1. Star Wars: Episode IV - A New Hope (1977)", 1);
  EXPECT_EQ(p.list.entries[0].raw_title, "Star Wars: Episode IV - A New Hope (1977)");
}

TEST(ParseRankedList, Corpus) {
  auto const corpus = testing::ParserCorpus();
  ASSERT_EQ(corpus.size(), 50u);
  std::size_t passed = 0;
  for (auto const& doc : corpus) {
    try {
      auto p = ParseRankedList(doc.text, 10);
      if (Titles(p.list) == doc.expected) {
        ++passed;
      } else {
        ADD_FAILURE() << doc.name << " parsed differently";
      }
    } catch (ParseError const&) {
      ADD_FAILURE() << doc.name << " did not parse";
    }
  }
  EXPECT_GE(static_cast<double>(passed) / static_cast<double>(corpus.size()), 0.95);
}

std::vector<RankedList> RandomLists(std::size_t count, std::uint64_t seed) {
  std::vector<std::string> const words{"Red",  "Night", "River", "Crown",  "Glass", "Winter",
                                       "Iron", "Ghost", "Sun",   "Harbor", "Lost",  "Echo",
                                       "Wolf", "Paper", "Storm", "Garden", "Salt",  "Orbit"};
  Rng rng(seed);
  std::vector<RankedList> out;
  for (std::size_t k = 0; k < count; ++k) {
    RankedList list;
    std::set<std::string> keys;
    std::size_t const size = 1 + rng.UniformIndex(20);
    while (list.size() < size) {
      std::string title = words[rng.UniformIndex(words.size())];
      std::size_t const extra = rng.UniformIndex(4);
      for (std::size_t w = 0; w < extra; ++w) title += " " + words[rng.UniformIndex(words.size())];
      if (rng.UniformIndex(2) == 0) title += ": Part " + std::to_string(1 + rng.UniformIndex(9));
      if (rng.UniformIndex(4) != 0) title += " (" + std::to_string(1920 + rng.UniformIndex(105)) + ")";
      auto const nt = NormalizeTitle(title);
      if (!keys.insert(nt.canonical + "|" + (nt.year ? std::to_string(*nt.year) : "")).second) {
        continue;
      }
      list.entries.push_back({static_cast<int>(list.size()) + 1, title});
    }
    out.push_back(std::move(list));
  }
  return out;
}

TEST(ParseRankedList, RenderParseRoundTrip) {
  for (auto const& list : RandomLists(1000, 5)) {
    auto parsed = ParseRankedList(RenderRankedList(list), list.size());
    ASSERT_EQ(parsed.list, list) << RenderRankedList(list);
    EXPECT_FALSE(parsed.degraded);
  }
}

PromptContext Context(ItemTable const& items) {
  PromptContext ctx;
  ctx.items = &items;
  return ctx;
}

UserHistory CaseStudyHistory() {
  return {"u1", {{"m1", 4.0}, {"m2", 4.5}, {"m4", 2.0}, {"m7", 3.0}}};
}

TEST(Prompts, InitialPromptContents) {
  auto items = testing::MovieTable();
  auto req = BuildInitialPrompt(CaseStudyHistory(), 10, nullptr, Context(*items));
  EXPECT_NE(req.user.find("numbered list"), std::string::npos);
  EXPECT_NE(req.user.find("exactly 10 items"), std::string::npos);
  EXPECT_NE(req.user.find("Movies watched and rated by the user:"), std::string::npos);
  EXPECT_NE(req.user.find("{\"title\": \"Airheads (1994)\""), std::string::npos);
  EXPECT_NE(req.user.find("\"starring\": \"Steve Buscemi\""), std::string::npos);
  EXPECT_NE(req.user.find("\"rating\": \"4.5\""), std::string::npos);
  EXPECT_EQ(req.user.find("Candidate"), std::string::npos);
  EXPECT_EQ(req.expected_count, 10);
  EXPECT_FALSE(req.system.empty());
  EXPECT_EQ(req.request_id.rfind("init-", 0), 0u);
  EXPECT_EQ(BuildInitialPrompt(CaseStudyHistory(), 10, nullptr, Context(*items)).request_id,
            req.request_id);
}

TEST(Prompts, SingleItemWording) {
  auto items = testing::MovieTable();
  auto req = BuildInitialPrompt(CaseStudyHistory(), 1, nullptr, Context(*items));
  EXPECT_NE(req.user.find("exactly 1 item"), std::string::npos);
  EXPECT_EQ(req.user.find("exactly 1 items"), std::string::npos);
  EXPECT_THROW(BuildInitialPrompt(CaseStudyHistory(), 0, nullptr, Context(*items)), ConfigError);
}

TEST(Prompts, CandidateBlockListsEveryCandidate) {
  std::vector<Item> table;
  for (int i = 0; i < 40; ++i) {
    table.push_back(testing::MakeItem("c" + std::to_string(i), "Candidate Film " + std::to_string(i)));
  }
  table.push_back(testing::MakeItem("h", "Seen (2000)"));
  ItemTable items(table);
  std::vector<Item const*> cands;
  for (int i = 0; i < 30; ++i) cands.push_back(&items.items()[static_cast<std::size_t>(i)]);
  auto req = BuildInitialPrompt({"u", {{"h", 4.0}}}, 10, &cands, Context(items));
  std::size_t lines = 0;
  for (std::size_t pos = 0; (pos = req.user.find("\n- ", pos)) != std::string::npos; ++pos) ++lines;
  EXPECT_EQ(lines, 30u);
  EXPECT_NE(req.user.find("Candidate movies:"), std::string::npos);
  EXPECT_NE(req.user.find("Choose only from the candidate movies"), std::string::npos);
  EXPECT_EQ(req.user.find("Candidate Film 30"), std::string::npos);
}

TEST(Prompts, RefinementCarriesEstimates) {
  auto items = testing::MovieTable();
  RankedList prev{{{1, "Blade (1998)"}, {2, "Heat (1995)"}}, 0};
  FeedbackReport fb;
  fb.entries.resize(2);
  fb.entries[0].raw_title = "Blade (1998)";
  fb.entries[0].score.estimated_rating = 2.0;
  fb.entries[1].raw_title = "Heat (1995)";
  fb.entries[1].score.estimated_rating = 4.5;
  auto req = BuildRefinementPrompt(CaseStudyHistory(), prev, fb, 10, Context(*items));
  EXPECT_NE(req.user.find("1. Blade (1998) \xE2\x80\x94 estimated rating 2.0/5.0"),
            std::string::npos);
  EXPECT_NE(req.user.find("2. Heat (1995) \xE2\x80\x94 estimated rating 4.5/5.0"),
            std::string::npos);
  EXPECT_NE(req.user.find("numbered list"), std::string::npos);
  auto const lines = MockLlmBackend::ParseFeedback(req.user);
  ASSERT_EQ(lines.size(), 2u);
  EXPECT_EQ(lines[0].title, "Blade (1998)");
  EXPECT_DOUBLE_EQ(lines[0].estimate, 2.0);
  EXPECT_DOUBLE_EQ(lines[1].max_rating, 5.0);

  fb.entries[1].raw_title = "Alien (1979)";
  EXPECT_THROW(BuildRefinementPrompt(CaseStudyHistory(), prev, fb, 10, Context(*items)), Error);
  fb.entries.pop_back();
  EXPECT_THROW(BuildRefinementPrompt(CaseStudyHistory(), prev, fb, 10, Context(*items)), Error);
}

TEST(ChatRequest, Validate) {
  ChatRequest r;
  EXPECT_THROW(r.Validate(), ConfigError);
  r.user = "hi";
  EXPECT_NO_THROW(r.Validate());
  r.temperature = 2.5;
  EXPECT_THROW(r.Validate(), ConfigError);
}

MockBackendConfig MockConfig() {
  MockBackendConfig cfg;
  auto items = testing::MovieTable();
  double pop = 100.0;
  for (auto const& item : items->items()) cfg.catalog.push_back({item.title, pop--});
  return cfg;
}

TEST(MockBackend, DeterministicAndExcludesHistory) {
  auto items = testing::MovieTable();
  auto req = BuildInitialPrompt(CaseStudyHistory(), 5, nullptr, Context(*items));
  MockLlmBackend a(MockConfig());
  MockLlmBackend b(MockConfig());
  auto ca = a.Complete(req);
  auto cb = b.Complete(req);
  ASSERT_TRUE(ca.ok());
  EXPECT_EQ(ca.text, cb.text);
  EXPECT_EQ(ca.record.latency_ms, cb.record.latency_ms);
  EXPECT_GT(ca.record.latency_ms, 0.0);
  auto p = ParseRankedList(ca.text, 5);
  EXPECT_EQ(p.list.size(), 5u);
  for (auto const& e : p.list.entries) {
    EXPECT_NE(e.raw_title, "Jurassic Park (1993)");
    EXPECT_NE(e.raw_title, "Gladiator (2000)");
    EXPECT_NE(e.raw_title, "Blade (1998)");
    EXPECT_NE(e.raw_title, "Airheads (1994)");
  }
}

TEST(MockBackend, RetainedTitlesFollowEstimates) {
  auto items = testing::MovieTable();
  Rng rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    RankedList prev;
    FeedbackReport fb;
    std::vector<std::string> pool{"Die Hard (1988)",  "Pulp Fiction (1994)", "Heat (1995)",
                                  "Alien (1979)",     "Fargo (1996)",        "Se7en (1995)",
                                  "Clueless (1995)", "The Dark Knight (2008)"};
    rng.Shuffle(pool);
    for (std::size_t i = 0; i < 6; ++i) {
      prev.entries.push_back({static_cast<int>(i) + 1, pool[i]});
      FeedbackEntry e;
      e.raw_title = pool[i];
      e.score.estimated_rating = 0.5 * static_cast<double>(1 + rng.UniformIndex(10));
      fb.entries.push_back(e);
    }
    auto req = BuildRefinementPrompt(CaseStudyHistory(), prev, fb, 6, Context(*items));
    MockLlmBackend mock(MockConfig());
    auto c = mock.Complete(req);
    ASSERT_TRUE(c.ok());
    auto out = ParseRankedList(c.text, 6).list;

    std::vector<std::pair<std::string, double>> retained;
    for (auto const& e : fb.entries) {
      if (e.score.estimated_rating / 5.0 >= 0.7) retained.emplace_back(e.raw_title, e.score.estimated_rating);
    }
    ASSERT_GE(out.size(), retained.size());
    double last = 1e9;
    for (std::size_t i = 0; i < retained.size(); ++i) {
      auto it = std::find_if(retained.begin(), retained.end(),
                             [&](auto const& r) { return r.first == out.entries[i].raw_title; });
      ASSERT_NE(it, retained.end()) << "position " << i + 1 << " is not a retained title";
      EXPECT_LE(it->second, last);
      last = it->second;
    }
    for (std::size_t i = retained.size(); i < out.size(); ++i) {
      for (auto const& e : fb.entries) EXPECT_NE(out.entries[i].raw_title, e.raw_title);
    }
  }
}

TEST(MockBackend, RespectsCandidateSet) {
  auto items = testing::MovieTable();
  std::vector<Item const*> cands{&items->At("m8"), &items->At("m9"), &items->At("m12")};
  auto req = BuildInitialPrompt(CaseStudyHistory(), 10, &cands, Context(*items));
  MockLlmBackend mock(MockConfig());
  auto p = ParseRankedList(mock.Complete(req).text, 10);
  auto const titles = Titles(p.list);
  std::set<std::string> got(titles.begin(), titles.end());
  EXPECT_EQ(got, (std::set<std::string>{"Heat (1995)", "Alien (1979)", "Clueless (1995)"}));
}

TEST(MockBackend, EmptyCatalogIsAnError) {
  MockLlmBackend mock(MockBackendConfig{});
  ChatRequest req;
  req.user = "recommend";
  auto c = mock.Complete(req);
  EXPECT_FALSE(c.ok());
  EXPECT_EQ(c.record.outcome, CallOutcome::kError);
}

TEST(CallLog, OneRecordPerCall) {
  auto log = std::make_shared<CallLog>();
  MockLlmBackend mock(MockConfig());
  mock.set_call_log(log);
  ChatRequest req;
  req.user = "recommend";
  req.request_id = "r1";
  mock.Complete(req);
  req.request_id = "r2";
  mock.Complete(req);
  auto records = log->Snapshot();
  ASSERT_EQ(records.size(), 2u);
  EXPECT_EQ(records[0].request_id, "r1");
  EXPECT_EQ(records[1].request_id, "r2");
  EXPECT_TRUE(records[0].prompt_tokens.has_value());
}

TEST(CallOutcome, NamesRoundTrip) {
  for (auto o : {CallOutcome::kOk, CallOutcome::kParseDegraded, CallOutcome::kError}) {
    EXPECT_EQ(ParseOutcome(OutcomeName(o)), o);
  }
  EXPECT_FALSE(ParseOutcome("bogus").has_value());
}

}  // namespace
}  // namespace critiquerec
