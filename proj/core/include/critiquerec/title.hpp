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

#ifndef CRITIQUEREC_TITLE_HPP_
#define CRITIQUEREC_TITLE_HPP_

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace critiquerec {

struct NormalizedTitle {
  std::string canonical;
  std::optional<int> year;

  friend bool operator==(NormalizedTitle const&, NormalizedTitle const&) = default;
};

/// Lowercases, trims, collapses whitespace and strips punctuation (keeping
/// apostrophes between word characters). A trailing "(YYYY)" is split off as
/// the year.
NormalizedTitle NormalizeTitle(std::string_view raw);

/// Sorted, de-duplicated character trigrams of " " + text + " " with each
/// word padded by two leading blanks and one trailing blank.
std::vector<std::string> Trigrams(std::string_view canonical);

/// Sorensen-Dice coefficient over trigram sets, in [0, 1].
double TrigramSimilarity(std::vector<std::string> const& a,
                         std::vector<std::string> const& b);

double TrigramSimilarity(std::string_view canonical_a,
                         std::string_view canonical_b);

}  // namespace critiquerec

#endif  // CRITIQUEREC_TITLE_HPP_
