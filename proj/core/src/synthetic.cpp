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

#include "critiquerec/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <map>
#include <string>

#include "critiquerec/error.hpp"
#include "critiquerec/random.hpp"

namespace critiquerec {

namespace {

struct Genre {
  char const* name;
  std::array<char const*, 10> adjectives;
  std::array<char const*, 10> nouns;
};

constexpr std::array<Genre, 4> kGenres{{
    {"space opera",
     {"stellar", "orbital", "quantum", "galactic", "nebular", "ion", "void", "solar", "cosmic",
      "warp"},
     {"fleet", "station", "drift", "frontier", "signal", "colony", "reactor", "horizon", "probe",
      "empire"}},
    {"romance",
     {"tender", "summer", "secret", "gentle", "moonlit", "velvet", "sweet", "lonely", "golden",
      "wistful"},
     {"letters", "promise", "garden", "waltz", "heart", "kiss", "wedding", "vows", "meadow",
      "embrace"}},
    {"mystery",
     {"hidden", "silent", "crooked", "shadowed", "locked", "missing", "poisoned", "foggy",
      "sinister", "forgotten"},
     {"alibi", "clue", "ledger", "witness", "cellar", "motive", "suspect", "inquest", "manor",
      "verdict"}},
    {"history",
     {"imperial", "ancient", "medieval", "royal", "colonial", "bronze", "feudal", "victorian",
      "roman", "byzantine"},
     {"dynasty", "siege", "chronicle", "crown", "treaty", "campaign", "legion", "throne",
      "conquest", "archive"}},
}};

constexpr std::array<char const*, 12> kAuthors{
    "Ada Marsh",  "Ben Okafor", "Clara Voss",  "Dev Patel",  "Elena Ruiz", "Felix Hart",
    "Grace Lin",  "Hugo Brandt", "Iris Moreau", "Jonas Berg", "Kira Sato",  "Leo Novak"};

std::string Capitalize(std::string s) {
  if (!s.empty() && s[0] >= 'a' && s[0] <= 'z') s[0] = static_cast<char>(s[0] - 'a' + 'A');
  return s;
}

}  // namespace

Dataset MakeClusterDataset(SyntheticConfig const& cfg) {
  if (cfg.clusters < 1 || cfg.clusters > kGenres.size()) {
    throw ConfigError("synthetic cluster count must be in [1, 4]");
  }
  if (cfg.items_per_genre < 1 || cfg.items_per_genre > 100) {
    throw ConfigError("synthetic items per genre must be in [1, 100]");
  }
  if (cfg.items_per_user > cfg.items_per_genre * cfg.clusters) {
    throw ConfigError("synthetic users cannot rate more items than exist");
  }
  Rng rng(DeriveSeed(cfg.seed, "synthetic"));
  RatingScale const scale = RatingScale::Books();

  std::vector<Item> items;
  for (std::size_t g = 0; g < cfg.clusters; ++g) {
    std::vector<std::size_t> combos(100);
    for (std::size_t i = 0; i < combos.size(); ++i) combos[i] = i;
    rng.Shuffle(combos);
    for (std::size_t k = 0; k < cfg.items_per_genre; ++k) {
      auto const& genre = kGenres[g];
      std::string const adj = genre.adjectives[combos[k] / 10];
      std::string const noun = genre.nouns[combos[k] % 10];
      int const year = 1960 + static_cast<int>(rng.UniformIndex(60));
      Item item;
      char id[64];
      std::snprintf(id, sizeof id, "g%zu-%03zu", g, k);
      item.item_id = id;
      item.title = "The " + Capitalize(adj) + " " + Capitalize(noun) + " (" +
                   std::to_string(year) + ")";
      item.year = year;
      item.attributes = {{"authors", kAuthors[rng.UniformIndex(kAuthors.size())]},
                         {"genre", genre.name}};
      items.push_back(std::move(item));
    }
  }

  Dataset d;
  d.name = "synthetic-clusters";
  d.schema = Schema::kBooks;
  d.scale = scale;
  std::size_t const user_count = cfg.clusters * cfg.users_per_cluster;
  for (std::size_t u = 0; u < user_count; ++u) {
    std::size_t const cluster = u % cfg.clusters;
    UserHistory h;
    char id[64];
    std::snprintf(id, sizeof id, "c%zu-u%05zu", cluster, u);
    h.user_id = id;
    std::vector<std::size_t> order(items.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (std::size_t i = 0; i < cfg.items_per_user; ++i) {
      std::size_t const j = i + static_cast<std::size_t>(rng.UniformIndex(order.size() - i));
      std::swap(order[i], order[j]);
      Item const& item = items[order[i]];
      // Latent factors are one-hot: user -> cluster, item -> genre.
      double const affinity = GenreOf(item) == cluster ? 1.0 : 0.0;
      double rating = affinity > 0.5 ? scale.max_rating() : scale.min_rating() + scale.step();
      if (rng.Uniform01() < cfg.label_noise) {
        rating = scale.RatingOf(static_cast<int>(rng.UniformIndex(scale.levels())));
      }
      h.interactions.push_back({item.item_id, rating});
    }
    d.users.push_back(std::move(h));
  }
  d.items = std::make_shared<ItemTable const>(std::move(items));
  d.summary.rows_read = d.summary.rows_kept = user_count * cfg.items_per_user;
  return d;
}

std::size_t ClusterOf(Dataset const&, std::string_view user_id) {
  if (user_id.size() < 2 || user_id[0] != 'c') throw Error("not a synthetic user id");
  return static_cast<std::size_t>(user_id[1] - '0');
}

std::size_t GenreOf(Item const& item) {
  if (item.item_id.size() < 2 || item.item_id[0] != 'g') throw Error("not a synthetic item id");
  return static_cast<std::size_t>(item.item_id[1] - '0');
}

std::vector<MockCatalogEntry> MockCatalogFromDataset(Dataset const& d) {
  std::map<std::string, double, std::less<>> counts;
  for (auto const& u : d.users) {
    for (auto const& i : u.interactions) counts[i.item_id] += 1.0;
  }
  std::vector<MockCatalogEntry> out;
  for (auto const& item : d.items->items()) {
    auto it = counts.find(item.item_id);
    out.push_back({item.title, it == counts.end() ? 0.0 : it->second});
  }
  return out;
}

}  // namespace critiquerec
