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

#ifndef CRITIQUEREC_FEEDBACK_HPP_
#define CRITIQUEREC_FEEDBACK_HPP_

#include <string>
#include <vector>

#include "critiquerec/catalog.hpp"
#include "critiquerec/critic.hpp"

namespace critiquerec {

/// Critic verdict on one entry of a ranked list.
struct FeedbackEntry {
  int rank = 0;
  std::string raw_title;
  MatchKind match = MatchKind::kUnresolved;
  /// Catalog item when resolved; empty otherwise.
  std::string item_id;
  /// True when the score came from a transient item built from the raw title.
  bool synthetic = false;
  CriticScore score;
};

/// Scores aligned one-to-one with the entries of a RankedList.
struct FeedbackReport {
  int loop_index = 0;
  std::vector<FeedbackEntry> entries;
};

}  // namespace critiquerec

#endif  // CRITIQUEREC_FEEDBACK_HPP_
