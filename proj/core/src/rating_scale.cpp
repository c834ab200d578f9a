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

#include "critiquerec/rating_scale.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <stdexcept>

namespace critiquerec {

RatingScale::RatingScale(double min_rating, double max_rating, double step)
    : min_(min_rating), max_(max_rating), step_(step), levels_(0) {
  if (!(step > 0.0) || !(max_rating >= min_rating) || !std::isfinite(min_rating) ||
      !std::isfinite(max_rating)) {
    throw std::invalid_argument("rating scale needs finite min <= max and step > 0");
  }
  levels_ = static_cast<int>(std::llround((max_rating - min_rating) / step)) + 1;
}

std::optional<int> RatingScale::LevelOf(double rating) const {
  if (!std::isfinite(rating)) return std::nullopt;
  double const pos = (rating - min_) / step_;
  long long const idx = std::llround(pos);
  if (idx < 0 || idx >= levels_) return std::nullopt;
  double const snapped = min_ + static_cast<double>(idx) * step_;
  if (std::fabs(snapped - rating) > 1e-9 * std::fmax(1.0, std::fabs(rating))) {
    return std::nullopt;
  }
  return static_cast<int>(idx);
}

double RatingScale::RatingOf(int level) const {
  if (level < 0 || level >= levels_) {
    throw std::out_of_range("rating level " + std::to_string(level) +
                            " outside [0, " + std::to_string(levels_) + ")");
  }
  return min_ + static_cast<double>(level) * step_;
}

std::string RatingScale::Format(double rating) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.1f", rating);
  if (std::strtod(buf, nullptr) != rating) {
    std::snprintf(buf, sizeof buf, "%.17g", rating);
  }
  return buf;
}

}  // namespace critiquerec
