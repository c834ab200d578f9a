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

#ifndef CRITIQUEREC_CATALOG_HPP_
#define CRITIQUEREC_CATALOG_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "critiquerec/rating_scale.hpp"
#include "critiquerec/title.hpp"

namespace critiquerec {

struct Item {
  std::string item_id;
  std::string title;
  std::optional<int> year;
  /// Ordered (field, value) pairs, e.g. directedBy, starring, authors.
  std::vector<std::pair<std::string, std::string>> attributes;

  /// Year from the title's "(YYYY)" suffix, falling back to `year`.
  std::optional<int> EffectiveYear() const;

  friend bool operator==(Item const&, Item const&) = default;
};

struct Interaction {
  std::string item_id;
  double rating = 0.0;

  friend bool operator==(Interaction const&, Interaction const&) = default;
};

/// A user's rated items. Consumers treat it as an unordered multiset.
struct UserHistory {
  std::string user_id;
  std::vector<Interaction> interactions;

  friend bool operator==(UserHistory const&, UserHistory const&) = default;
};

/// Immutable item table shared between datasets derived from one load.
class ItemTable {
 public:
  ItemTable() = default;
  explicit ItemTable(std::vector<Item> items);

  std::size_t size() const { return items_.size(); }
  std::vector<Item> const& items() const { return items_; }
  Item const* Find(std::string_view item_id) const;
  Item const& At(std::string_view item_id) const;

  friend bool operator==(ItemTable const& a, ItemTable const& b) {
    return a.items_ == b.items_;
  }

 private:
  std::vector<Item> items_;
  std::unordered_map<std::string, std::size_t> index_;
};

enum class Schema { kMovies, kBooks, kGeneric };

std::optional<Schema> ParseSchema(std::string_view name);
std::string_view SchemaName(Schema schema);
/// Domain noun used in prompts: "Movies", "Books", "Items".
std::string_view SchemaNoun(Schema schema);

struct LoadSummary {
  std::size_t rows_read = 0;
  std::size_t rows_kept = 0;
  std::size_t rejected_off_scale = 0;
  std::size_t rejected_missing_title = 0;
  std::size_t rejected_duplicate = 0;
  std::size_t malformed = 0;
  /// 1-based line of the first rejected or malformed row, 0 when none.
  std::size_t first_bad_line = 0;

  std::size_t rejected() const {
    return rejected_off_scale + rejected_missing_title + rejected_duplicate +
           malformed;
  }
};

struct Dataset {
  std::string name;
  Schema schema = Schema::kGeneric;
  RatingScale scale = RatingScale::Movies();
  std::shared_ptr<ItemTable const> items = std::make_shared<ItemTable const>();
  std::vector<UserHistory> users;
  LoadSummary summary;

  /// Field-by-field equality (load summary excluded).
  bool SameContent(Dataset const& other) const;
};

struct LoadOptions {
  /// Fraction of malformed rows tolerated before the load aborts.
  double max_malformed_fraction = 0.01;
  /// Sidecar path; defaults to "<path without extension>.meta.json".
  std::optional<std::filesystem::path> sidecar;
};

/// Loads a JSONL interaction file. Rows carrying a rating become interactions
/// (user "anonymous" when user_id is absent); rows without a rating only add
/// catalog items. Off-scale ratings, missing titles, and duplicate
/// (user, item) pairs are rejected and counted. Malformed rows beyond the
/// threshold abort with a DatasetError naming the first bad line.
Dataset LoadDataset(std::filesystem::path const& path, Schema schema,
                    LoadOptions const& options = {});

/// Writes `d` as JSONL plus sidecar so that LoadDataset reproduces it.
void SaveDataset(Dataset const& d, std::filesystem::path const& path);

std::filesystem::path DefaultSidecarPath(std::filesystem::path const& path);

struct SplitRatios {
  double train = 0.8;
  double val = 0.1;
  double test = 0.1;
};

struct DatasetSplit {
  Dataset train;
  Dataset val;
  Dataset test;
};

/// User-disjoint seeded partition. Sizes are floor(n * ratio) for val and
/// test, remainder to train.
DatasetSplit SplitUsers(Dataset const& d, SplitRatios const& ratios,
                        std::uint64_t seed);

/// Deterministic subsample of `count` users (all users when count >= size).
Dataset SampleUsers(Dataset const& d, std::size_t count, std::uint64_t seed);

struct EvalInstance {
  std::string user_id;
  UserHistory history;
  std::vector<Interaction> held_out;
  /// Candidate-set protocol only.
  std::optional<std::vector<std::string>> candidate_ids;

  std::optional<double> HeldOutRating(std::string_view item_id) const;
};

/// Draws `k` interactions without replacement as context; the rest are held
/// out. Returns nullopt (skip) when the user has <= k interactions. The draw
/// is fixed per (user_id, seed).
std::optional<EvalInstance> SampleEvalInstance(UserHistory const& user,
                                               std::size_t k,
                                               std::uint64_t seed);

/// Adds a candidate set: up to ceil(size/2) held-out items plus random
/// distractors the user never rated, shuffled.
void AttachCandidateSet(EvalInstance& instance, Dataset const& d,
                        std::size_t size, std::uint64_t seed);

enum class MatchKind { kExact, kFuzzy, kUnresolved };

struct Resolution {
  MatchKind kind = MatchKind::kUnresolved;
  Item const* item = nullptr;
  double score = 0.0;
};

/// Title index over an item table for mapping free-text titles to items.
class Catalog {
 public:
  static constexpr double kFuzzyThreshold = 0.85;

  explicit Catalog(std::shared_ptr<ItemTable const> items);

  /// Exact (canonical, year) match wins; otherwise the best trigram match is
  /// accepted when its score >= 0.85 and years agree whenever both exist.
  Resolution Resolve(std::string_view raw_title) const;

  ItemTable const& items() const { return *items_; }
  std::shared_ptr<ItemTable const> shared_items() const { return items_; }

 private:
  struct Entry {
    NormalizedTitle title;
    std::vector<std::string> trigrams;
  };

  std::shared_ptr<ItemTable const> items_;
  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::vector<std::size_t>> by_canonical_;
  std::unordered_map<std::string, std::vector<std::uint32_t>> by_trigram_;
};

}  // namespace critiquerec

#endif  // CRITIQUEREC_CATALOG_HPP_
