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

#ifndef CRITIQUEREC_TESTS_FIXTURES_HPP_
#define CRITIQUEREC_TESTS_FIXTURES_HPP_

#include <unistd.h>

#include <atomic>
#include <deque>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "critiquerec/catalog.hpp"
#include "critiquerec/llm_gateway.hpp"
#include "critiquerec/random.hpp"

namespace critiquerec::testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(std::string const& name) {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("critiquerec-" + name + "-" + std::to_string(::getpid()) + "-" +
             std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(TempDir const&) = delete;
  TempDir& operator=(TempDir const&) = delete;

  std::filesystem::path const& path() const { return path_; }
  std::filesystem::path operator/(std::string const& rel) const { return path_ / rel; }

 private:
  std::filesystem::path path_;
};

inline void WriteText(std::filesystem::path const& p, std::string const& text) {
  std::ofstream f(p, std::ios::binary);
  f << text;
}

inline std::string ReadText(std::filesystem::path const& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

inline Item MakeItem(std::string id, std::string title,
                     std::vector<std::pair<std::string, std::string>> attrs = {}) {
  Item item;
  item.item_id = std::move(id);
  item.title = std::move(title);
  item.attributes = std::move(attrs);
  return item;
}

/// Movie titles from the case study plus filler, as a shared item table.
inline std::shared_ptr<ItemTable const> MovieTable() {
  std::vector<Item> items{
      MakeItem("m1", "Jurassic Park (1993)", {{"directedBy", "Steven Spielberg"}}),
      MakeItem("m2", "Gladiator (2000)", {{"directedBy", "Ridley Scott"}}),
      MakeItem("m3", "Die Hard (1988)", {{"directedBy", "John McTiernan"}}),
      MakeItem("m4", "Blade (1998)", {{"directedBy", "Stephen Norrington"}}),
      MakeItem("m5", "Pulp Fiction (1994)", {{"directedBy", "Quentin Tarantino"}}),
      MakeItem("m6", "The Dark Knight (2008)", {{"directedBy", "Christopher Nolan"}}),
      MakeItem("m7", "Airheads (1994)",
               {{"directedBy", "Michael Lehmann"}, {"starring", "Steve Buscemi"}}),
      MakeItem("m8", "Heat (1995)", {{"directedBy", "Michael Mann"}}),
      MakeItem("m9", "Alien (1979)", {{"directedBy", "Ridley Scott"}}),
      MakeItem("m10", "Fargo (1996)", {{"directedBy", "Joel Coen"}}),
      MakeItem("m11", "Se7en (1995)", {{"directedBy", "David Fincher"}}),
      MakeItem("m12", "Clueless (1995)", {{"directedBy", "Amy Heckerling"}}),
  };
  return std::make_shared<ItemTable const>(std::move(items));
}

/// Backend that replays scripted replies; an empty reply simulates failure.
class ScriptedBackend final : public LlmBackend {
 public:
  explicit ScriptedBackend(std::vector<std::string> replies) : replies_(replies.begin(), replies.end()) {}

  std::string_view kind() const override { return "scripted"; }

  Completion Complete(ChatRequest const& request) override {
    std::lock_guard<std::mutex> lock(mu_);
    requests.push_back(request);
    Completion c;
    c.record.request_id = request.request_id;
    c.record.latency_ms = 10.0 * static_cast<double>(requests.size());
    if (replies_.empty() || replies_.front().empty()) {
      c.error = "scripted failure";
      c.record.outcome = CallOutcome::kError;
    } else {
      c.text = replies_.front();
    }
    if (!replies_.empty()) replies_.pop_front();
    Record(c.record);
    return c;
  }

  std::vector<ChatRequest> requests;

 private:
  std::mutex mu_;
  std::deque<std::string> replies_;
};


/// Candidate-set protocol fixture: 10 recommendations of which exactly 3 are
/// outside the candidate set (two catalog items that were not offered and one
/// unknown title). Of the 7 in-set entries, 4 are held out with rating >= 4,
/// 1 is held out with rating 2 and 2 were never rated.
struct CandidateFixture {
  std::shared_ptr<ItemTable const> items;
  EvalInstance instance;
  RankedList list;
  std::vector<int> expected_rels;
  std::vector<bool> expected_out_of_set;
};

inline CandidateFixture MakeCandidateFixture() {
  CandidateFixture f;
  std::vector<Item> table;
  for (int i = 0; i < 20; ++i) {
    table.push_back(MakeItem("b" + std::to_string(i), "Fixture Book Number " + std::to_string(i) +
                                                          " (" + std::to_string(1990 + i) + ")"));
  }
  f.items = std::make_shared<ItemTable const>(std::move(table));
  f.instance.user_id = "cand-user";
  f.instance.history = {"cand-user", {{"b0", 5.0}, {"b1", 1.0}}};
  f.instance.held_out = {{"b2", 5.0}, {"b3", 4.0}, {"b4", 4.5}, {"b5", 4.0}, {"b6", 2.0},
                         {"b15", 5.0}};
  f.instance.candidate_ids = std::vector<std::string>{"b2", "b3", "b4", "b5", "b6", "b7", "b8"};
  auto title = [&](std::string const& id) { return f.items->At(id).title; };
  std::vector<std::pair<std::string, std::pair<int, bool>>> const entries{
      {title("b2"), {1, false}},  {title("b15"), {0, true}}, {title("b3"), {1, false}},
      {title("b7"), {0, false}},  {"Not A Real Book (2001)", {0, true}},
      {title("b4"), {1, false}},  {title("b6"), {0, false}}, {title("b16"), {0, true}},
      {title("b5"), {1, false}},  {title("b8"), {0, false}}};
  for (auto const& [t, expect] : entries) {
    f.list.entries.push_back({static_cast<int>(f.list.entries.size()) + 1, t});
    f.expected_rels.push_back(expect.first);
    f.expected_out_of_set.push_back(expect.second);
  }
  return f;
}

}  // namespace critiquerec::testing

#endif  // CRITIQUEREC_TESTS_FIXTURES_HPP_
