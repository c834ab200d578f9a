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

#ifndef CRITIQUEREC_SYNTHETIC_HPP_
#define CRITIQUEREC_SYNTHETIC_HPP_

#include <cstdint>
#include <vector>

#include "critiquerec/catalog.hpp"
#include "critiquerec/llm_gateway.hpp"

namespace critiquerec {

/// Planted-preference benchmark. Users belong to latent clusters, items to
/// genres; a user likes an item iff the dot product of their one-hot latent
/// factors is positive, i.e. the item's genre matches the user's cluster.
struct SyntheticConfig {
  std::size_t clusters = 2;
  std::size_t users_per_cluster = 200;
  std::size_t items_per_user = 30;
  std::size_t items_per_genre = 60;
  /// Probability a rating is replaced by a uniformly random level.
  double label_noise = 0.1;
  std::uint64_t seed = 1;
};

/// Books-scale dataset (1..5). Liked items are rated 5, others 2.
Dataset MakeClusterDataset(SyntheticConfig const& cfg);

/// Cluster of a user produced by MakeClusterDataset.
std::size_t ClusterOf(Dataset const& d, std::string_view user_id);
/// Genre index of an item produced by MakeClusterDataset.
std::size_t GenreOf(Item const& item);

/// Mock chat catalog: every item with its rating count as popularity.
std::vector<MockCatalogEntry> MockCatalogFromDataset(Dataset const& d);

}  // namespace critiquerec

#endif  // CRITIQUEREC_SYNTHETIC_HPP_
