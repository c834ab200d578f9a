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

#ifndef CRITIQUEREC_RATING_SCALE_HPP_
#define CRITIQUEREC_RATING_SCALE_HPP_

#include <optional>
#include <string>

namespace critiquerec {

/// Discrete rating scale. Each on-scale rating maps to one class level in
/// [0, levels()).
class RatingScale {
 public:
  RatingScale(double min_rating, double max_rating, double step);

  static RatingScale Movies() { return {0.5, 5.0, 0.5}; }
  static RatingScale Books() { return {1.0, 5.0, 1.0}; }

  double min_rating() const { return min_; }
  double max_rating() const { return max_; }
  double step() const { return step_; }
  int levels() const { return levels_; }

  /// Level index of an on-scale rating, nullopt when off-scale.
  std::optional<int> LevelOf(double rating) const;
  /// Throws std::out_of_range for level outside [0, levels()).
  double RatingOf(int level) const;
  bool OnScale(double rating) const { return LevelOf(rating).has_value(); }

  /// Renders a rating with one decimal, e.g. "4.0".
  static std::string Format(double rating);

  friend bool operator==(RatingScale const&, RatingScale const&) = default;

 private:
  double min_;
  double max_;
  double step_;
  int levels_;
};

}  // namespace critiquerec

#endif  // CRITIQUEREC_RATING_SCALE_HPP_
