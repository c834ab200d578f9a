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

#include "critiquerec/catalog.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>

#include "critiquerec/error.hpp"
#include "critiquerec/random.hpp"
#include "json.hpp"

namespace critiquerec {

using ojson = nlohmann::ordered_json;

std::optional<int> Item::EffectiveYear() const {
  if (auto y = NormalizeTitle(title).year) return y;
  return year;
}

ItemTable::ItemTable(std::vector<Item> items) : items_(std::move(items)) {
  index_.reserve(items_.size());
  for (std::size_t i = 0; i < items_.size(); ++i) {
    if (!index_.emplace(items_[i].item_id, i).second) {
      throw DatasetError("duplicate item_id '" + items_[i].item_id + "'");
    }
  }
}

Item const* ItemTable::Find(std::string_view item_id) const {
  auto it = index_.find(std::string(item_id));
  return it == index_.end() ? nullptr : &items_[it->second];
}

Item const& ItemTable::At(std::string_view item_id) const {
  if (auto const* item = Find(item_id)) return *item;
  throw DatasetError("unknown item_id '" + std::string(item_id) + "'");
}

std::optional<Schema> ParseSchema(std::string_view name) {
  if (name == "movies") return Schema::kMovies;
  if (name == "books") return Schema::kBooks;
  if (name == "generic") return Schema::kGeneric;
  return std::nullopt;
}

std::string_view SchemaName(Schema schema) {
  switch (schema) {
    case Schema::kMovies: return "movies";
    case Schema::kBooks: return "books";
    case Schema::kGeneric: return "generic";
  }
  return "generic";
}

std::string_view SchemaNoun(Schema schema) {
  switch (schema) {
    case Schema::kMovies: return "Movies";
    case Schema::kBooks: return "Books";
    case Schema::kGeneric: return "Items";
  }
  return "Items";
}

bool Dataset::SameContent(Dataset const& other) const {
  return name == other.name && schema == other.schema && scale == other.scale &&
         *items == *other.items && users == other.users;
}

std::filesystem::path DefaultSidecarPath(std::filesystem::path const& path) {
  auto sidecar = path;
  sidecar.replace_extension(".meta.json");
  return sidecar;
}

namespace {

constexpr std::string_view kAnonymousUser = "anonymous";

std::vector<std::string_view> KnownFieldOrder(Schema schema) {
  switch (schema) {
    case Schema::kMovies: return {"directedBy", "starring"};
    case Schema::kBooks: return {"url", "authors", "lang", "description"};
    case Schema::kGeneric: return {};
  }
  return {};
}

bool IsReserved(std::string_view key) {
  return key == "user_id" || key == "item_id" || key == "title" || key == "rating" ||
         key == "year";
}

// Scalar id fields may be written as strings or integers.
std::optional<std::string> IdField(ojson const& row, char const* key) {
  auto it = row.find(key);
  if (it == row.end() || it->is_null()) return std::nullopt;
  if (it->is_string()) return it->get<std::string>();
  if (it->is_number_integer() || it->is_number_unsigned()) return it->dump();
  throw std::invalid_argument(std::string(key) + " must be a string or integer");
}

std::string AttributeText(ojson const& value) {
  if (value.is_string()) return value.get<std::string>();
  if (value.is_array()) {
    std::string joined;
    for (auto const& v : value) {
      if (!joined.empty()) joined += ", ";
      joined += v.is_string() ? v.get<std::string>() : v.dump();
    }
    return joined;
  }
  return value.dump();
}

std::optional<double> ParseRating(ojson const& v) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    std::string const s = v.get<std::string>();
    std::size_t used = 0;
    double r = std::stod(s, &used);  // throws on garbage
    while (used < s.size() && std::isspace(static_cast<unsigned char>(s[used]))) ++used;
    if (used != s.size()) throw std::invalid_argument("trailing characters in rating");
    return r;
  }
  throw std::invalid_argument("rating must be a number or numeric string");
}

std::string DerivedItemId(std::string const& title) {
  auto const nt = NormalizeTitle(title);
  std::string id = "t:" + nt.canonical;
  if (nt.year) id += " (" + std::to_string(*nt.year) + ")";
  return id;
}

struct Sidecar {
  std::string name;
  std::optional<RatingScale> scale;
};

std::optional<Sidecar> ReadSidecar(std::filesystem::path const& path) {
  std::ifstream in(path);
  if (!in) return std::nullopt;
  ojson meta;
  try {
    meta = ojson::parse(in);
  } catch (std::exception const& e) {
    throw DatasetError("sidecar " + path.string() + " is not valid JSON: " + e.what());
  }
  Sidecar sc;
  sc.name = meta.value("name", std::string{});
  if (auto it = meta.find("scale"); it != meta.end()) {
    try {
      sc.scale = RatingScale(it->at("min").get<double>(), it->at("max").get<double>(),
                             it->at("step").get<double>());
    } catch (std::exception const& e) {
      throw DatasetError("sidecar " + path.string() + " has an invalid scale: " + e.what());
    }
  }
  return sc;
}

}  // namespace

Dataset LoadDataset(std::filesystem::path const& path, Schema schema,
                    LoadOptions const& options) {
  std::ifstream in(path);
  if (!in) throw DatasetError("cannot read dataset file " + path.string());

  Dataset d;
  d.schema = schema;
  d.name = path.stem().string();
  auto const sidecar_path = options.sidecar.value_or(DefaultSidecarPath(path));
  auto const sidecar = ReadSidecar(sidecar_path);
  if (sidecar) {
    if (!sidecar->name.empty()) d.name = sidecar->name;
    if (sidecar->scale) d.scale = *sidecar->scale;
  }
  if (!sidecar || !sidecar->scale) {
    switch (schema) {
      case Schema::kMovies: d.scale = RatingScale::Movies(); break;
      case Schema::kBooks: d.scale = RatingScale::Books(); break;
      case Schema::kGeneric:
        throw DatasetError("generic dataset " + path.string() +
                           " needs a sidecar declaring its rating scale (" +
                           sidecar_path.string() + ")");
    }
  }

  std::vector<Item> items;
  std::unordered_map<std::string, std::size_t> item_index;
  std::unordered_map<std::string, std::size_t> user_index;
  std::set<std::pair<std::string, std::string>> seen_pairs;
  LoadSummary& s = d.summary;
  std::string first_bad_reason;
  auto const known_order = KnownFieldOrder(schema);

  auto note_bad = [&](std::size_t line_no, std::string reason) {
    if (s.first_bad_line == 0) {
      s.first_bad_line = line_no;
      first_bad_reason = std::move(reason);
    }
  };

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (std::all_of(line.begin(), line.end(),
                    [](unsigned char c) { return std::isspace(c) != 0; })) {
      continue;
    }
    ++s.rows_read;
    try {
      ojson const row = ojson::parse(line);
      if (!row.is_object()) throw std::invalid_argument("row is not a JSON object");

      auto const user_id = IdField(row, "user_id");
      auto item_id = IdField(row, "item_id");
      std::optional<std::string> title;
      if (auto it = row.find("title"); it != row.end() && !it->is_null()) {
        if (!it->is_string()) throw std::invalid_argument("title must be a string");
        title = it->get<std::string>();
      }
      std::optional<double> rating;
      if (auto it = row.find("rating"); it != row.end() && !it->is_null()) {
        rating = ParseRating(*it);
      }
      std::optional<int> year;
      if (auto it = row.find("year"); it != row.end() && !it->is_null()) {
        if (it->is_number_integer()) {
          year = it->get<int>();
        } else if (it->is_string()) {
          year = std::stoi(it->get<std::string>());
        } else {
          throw std::invalid_argument("year must be an integer");
        }
      }

      bool const known_item = item_id && item_index.contains(*item_id);
      bool const has_title = title && !NormalizeTitle(*title).canonical.empty();
      if (!known_item && !has_title) {
        ++s.rejected_missing_title;
        note_bad(line_no, "missing title");
        continue;
      }
      if (rating && !d.scale.OnScale(*rating)) {
        ++s.rejected_off_scale;
        note_bad(line_no, "rating " + RatingScale::Format(*rating) + " is off-scale");
        continue;
      }
      if (!item_id) item_id = DerivedItemId(*title);

      if (!item_index.contains(*item_id)) {
        Item item;
        item.item_id = *item_id;
        item.title = *title;
        item.year = year;
        for (auto key : known_order) {
          if (auto it = row.find(std::string(key)); it != row.end() && !it->is_null()) {
            item.attributes.emplace_back(std::string(key), AttributeText(*it));
          }
        }
        for (auto const& [key, value] : row.items()) {
          if (IsReserved(key) || value.is_null()) continue;
          if (std::find(known_order.begin(), known_order.end(), key) != known_order.end()) {
            continue;
          }
          item.attributes.emplace_back(key, AttributeText(value));
        }
        item_index.emplace(*item_id, items.size());
        items.push_back(std::move(item));
      }

      if (rating) {
        std::string const uid = user_id.value_or(std::string(kAnonymousUser));
        if (!seen_pairs.emplace(uid, *item_id).second) {
          ++s.rejected_duplicate;
          note_bad(line_no, "duplicate rating of item '" + *item_id + "' by user '" + uid + "'");
          continue;
        }
        auto [it, inserted] = user_index.emplace(uid, d.users.size());
        if (inserted) d.users.push_back(UserHistory{uid, {}});
        // Store the canonical on-scale value so level round-trips are exact.
        double const canonical = d.scale.RatingOf(*d.scale.LevelOf(*rating));
        d.users[it->second].interactions.push_back(Interaction{*item_id, canonical});
      }
      ++s.rows_kept;
    } catch (std::exception const& e) {
      ++s.malformed;
      note_bad(line_no, std::string("malformed record: ") + e.what());
    }
  }

  if (s.malformed > 0 && static_cast<double>(s.malformed) >
                             options.max_malformed_fraction * static_cast<double>(s.rows_read)) {
    std::ostringstream msg;
    msg << path.string() << ": " << s.malformed << " of " << s.rows_read
        << " rows malformed (limit " << options.max_malformed_fraction * 100.0
        << "%); first bad line " << s.first_bad_line << ": " << first_bad_reason;
    throw DatasetError(msg.str());
  }

  d.items = std::make_shared<ItemTable const>(std::move(items));
  return d;
}

void SaveDataset(Dataset const& d, std::filesystem::path const& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  {
    ojson meta;
    meta["name"] = d.name;
    meta["schema"] = std::string(SchemaName(d.schema));
    meta["scale"] = {{"min", d.scale.min_rating()},
                     {"max", d.scale.max_rating()},
                     {"step", d.scale.step()}};
    std::ofstream out(DefaultSidecarPath(path));
    if (!out) throw DatasetError("cannot write sidecar for " + path.string());
    out << meta.dump(2) << '\n';
  }
  std::ofstream out(path);
  if (!out) throw DatasetError("cannot write dataset file " + path.string());
  for (auto const& item : d.items->items()) {
    ojson row;
    row["item_id"] = item.item_id;
    row["title"] = item.title;
    if (item.year) row["year"] = *item.year;
    for (auto const& [key, value] : item.attributes) row[key] = value;
    out << row.dump() << '\n';
  }
  for (auto const& user : d.users) {
    for (auto const& inter : user.interactions) {
      ojson row;
      row["user_id"] = user.user_id;
      row["item_id"] = inter.item_id;
      row["rating"] = inter.rating;
      out << row.dump() << '\n';
    }
  }
}

namespace {

Dataset WithUsers(Dataset const& d, std::vector<std::size_t> indices) {
  std::sort(indices.begin(), indices.end());
  Dataset out;
  out.name = d.name;
  out.schema = d.schema;
  out.scale = d.scale;
  out.items = d.items;
  out.users.reserve(indices.size());
  for (auto i : indices) out.users.push_back(d.users[i]);
  return out;
}

}  // namespace

DatasetSplit SplitUsers(Dataset const& d, SplitRatios const& r, std::uint64_t seed) {
  if (r.train < 0 || r.val < 0 || r.test < 0 ||
      std::fabs(r.train + r.val + r.test - 1.0) > 1e-9) {
    throw ConfigError("split ratios must be non-negative and sum to 1");
  }
  std::size_t const n = d.users.size();
  std::size_t const nonzero = (r.train > 0) + (r.val > 0) + (r.test > 0);
  if (n < nonzero) {
    throw DatasetError("cannot split " + std::to_string(n) + " users into " +
                       std::to_string(nonzero) + " non-empty partitions");
  }
  auto floor_count = [n](double ratio) {
    return static_cast<std::size_t>(std::floor(static_cast<double>(n) * ratio + 1e-9));
  };
  std::size_t const n_val = floor_count(r.val);
  std::size_t const n_test = floor_count(r.test);
  std::size_t const n_train = n - n_val - n_test;

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(Mix64(seed ^ 0x73706c6974ULL));
  rng.Shuffle(order);

  auto take = [&](std::size_t from, std::size_t count) {
    return std::vector<std::size_t>(order.begin() + static_cast<std::ptrdiff_t>(from),
                                    order.begin() + static_cast<std::ptrdiff_t>(from + count));
  };
  return DatasetSplit{WithUsers(d, take(0, n_train)), WithUsers(d, take(n_train, n_val)),
                      WithUsers(d, take(n_train + n_val, n_test))};
}

Dataset SampleUsers(Dataset const& d, std::size_t count, std::uint64_t seed) {
  std::vector<std::size_t> order(d.users.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(Mix64(seed ^ 0x73616d706c65ULL));
  rng.Shuffle(order);
  if (count < order.size()) order.resize(count);
  return WithUsers(d, std::move(order));
}

std::optional<double> EvalInstance::HeldOutRating(std::string_view item_id) const {
  for (auto const& inter : held_out) {
    if (inter.item_id == item_id) return inter.rating;
  }
  return std::nullopt;
}

std::optional<EvalInstance> SampleEvalInstance(UserHistory const& user, std::size_t k,
                                               std::uint64_t seed) {
  std::size_t const n = user.interactions.size();
  if (n <= k) return std::nullopt;
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  Rng rng(DeriveSeed(seed, user.user_id));
  for (std::size_t i = 0; i < k; ++i) {
    std::size_t const j = i + static_cast<std::size_t>(rng.UniformIndex(n - i));
    std::swap(idx[i], idx[j]);
  }
  std::sort(idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end());

  EvalInstance inst;
  inst.user_id = user.user_id;
  inst.history.user_id = user.user_id;
  for (std::size_t i = 0; i < k; ++i) {
    inst.history.interactions.push_back(user.interactions[idx[i]]);
  }
  for (std::size_t i = k; i < n; ++i) inst.held_out.push_back(user.interactions[idx[i]]);
  return inst;
}

void AttachCandidateSet(EvalInstance& instance, Dataset const& d, std::size_t size,
                        std::uint64_t seed) {
  Rng rng(DeriveSeed(seed, "candidates:" + instance.user_id));
  std::vector<std::string> rated;
  for (auto const& inter : instance.held_out) rated.push_back(inter.item_id);
  rng.Shuffle(rated);
  rated.resize(std::min(rated.size(), (size + 1) / 2));

  std::unordered_set<std::string> seen;
  for (auto const& inter : instance.history.interactions) seen.insert(inter.item_id);
  for (auto const& inter : instance.held_out) seen.insert(inter.item_id);
  std::vector<std::string> pool;
  for (auto const& item : d.items->items()) {
    if (!seen.contains(item.item_id)) pool.push_back(item.item_id);
  }
  rng.Shuffle(pool);

  std::vector<std::string> candidates = std::move(rated);
  for (std::size_t i = 0; i < pool.size() && candidates.size() < size; ++i) {
    candidates.push_back(pool[i]);
  }
  rng.Shuffle(candidates);
  instance.candidate_ids = std::move(candidates);
}

Catalog::Catalog(std::shared_ptr<ItemTable const> items) : items_(std::move(items)) {
  entries_.reserve(items_->size());
  for (std::size_t i = 0; i < items_->size(); ++i) {
    auto const& item = items_->items()[i];
    Entry e;
    e.title = NormalizeTitle(item.title);
    if (!e.title.year) e.title.year = item.year;
    e.trigrams = Trigrams(e.title.canonical);
    by_canonical_[e.title.canonical].push_back(i);
    for (auto const& g : e.trigrams) by_trigram_[g].push_back(static_cast<std::uint32_t>(i));
    entries_.push_back(std::move(e));
  }
}

Resolution Catalog::Resolve(std::string_view raw_title) const {
  auto const query = NormalizeTitle(raw_title);
  if (query.canonical.empty()) return {};
  auto item_at = [this](std::size_t i) { return &items_->items()[i]; };

  if (auto it = by_canonical_.find(query.canonical); it != by_canonical_.end()) {
    for (auto i : it->second) {
      auto const& year = entries_[i].title.year;
      if (!query.year || !year || *year == *query.year) {
        return {MatchKind::kExact, item_at(i), 1.0};
      }
    }
  }

  auto const grams = Trigrams(query.canonical);
  std::unordered_map<std::uint32_t, std::size_t> shared;
  for (auto const& g : grams) {
    auto it = by_trigram_.find(g);
    if (it == by_trigram_.end()) continue;
    for (auto i : it->second) ++shared[i];
  }
  double best = -1.0;
  std::size_t best_index = 0;
  for (auto const& [i, count] : shared) {
    auto const& entry = entries_[i];
    if (query.year && entry.title.year && *query.year != *entry.title.year) continue;
    double const score = 2.0 * static_cast<double>(count) /
                         static_cast<double>(grams.size() + entry.trigrams.size());
    if (score > best || (score == best && i < best_index)) {
      best = score;
      best_index = i;
    }
  }
  if (best >= kFuzzyThreshold) return {MatchKind::kFuzzy, item_at(best_index), best};
  return {};
}

}  // namespace critiquerec
