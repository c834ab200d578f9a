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

#ifndef CRITIQUEREC_TESTS_METRIC_ORACLE_HPP_
#define CRITIQUEREC_TESTS_METRIC_ORACLE_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

#include "critiquerec/metrics.hpp"
#include "critiquerec/random.hpp"

namespace critiquerec::testing {

/// Direct transcriptions of the metric definitions.
inline double OracleHit(std::vector<int> const& rels, std::size_t n) {
  bool hit = false;
  for (std::size_t i = 0; i < rels.size() && i < n; ++i) hit = hit || rels[i] > 0;
  return hit ? 1.0 : 0.0;
}

inline double OracleDcg(std::vector<int> const& rels, std::size_t n) {
  double dcg = 0.0;
  for (std::size_t i = 1; i <= rels.size() && i <= n; ++i) {
    dcg += (std::pow(2.0, rels[i - 1]) - 1.0) / (std::log(static_cast<double>(i) + 1.0) / std::log(2.0));
  }
  return dcg;
}

/// Ideal DCG by exhaustive search over orderings of the window.
inline double OracleIdcgBruteForce(std::vector<int> window) {
  std::sort(window.begin(), window.end());
  double best = 0.0;
  do {
    best = std::max(best, OracleDcg(window, window.size()));
  } while (std::next_permutation(window.begin(), window.end()));
  return best;
}

/// Ideal DCG of a binary window: all k relevant items first.
inline double OracleIdcgBinary(std::vector<int> const& window) {
  std::size_t k = 0;
  for (int r : window) k += r > 0 ? 1 : 0;
  double idcg = 0.0;
  for (std::size_t i = 1; i <= k; ++i) idcg += 1.0 / std::log2(static_cast<double>(i) + 1.0);
  return idcg;
}

inline double OracleNdcg(std::vector<int> const& rels, std::size_t n, bool brute_force_ideal) {
  std::vector<int> window(rels.begin(), rels.begin() + static_cast<std::ptrdiff_t>(std::min(n, rels.size())));
  double const idcg = brute_force_ideal ? OracleIdcgBruteForce(window) : OracleIdcgBinary(window);
  if (idcg == 0.0) return 0.0;
  return OracleDcg(window, window.size()) / idcg;
}

/// `counted[i]` is false for positions excluded from the denominator.
inline std::optional<double> OraclePrecision(std::vector<int> const& rels,
                                             std::vector<bool> const& counted, std::size_t n,
                                             bool exclude_uncounted) {
  double relevant = 0.0;
  double denom = exclude_uncounted ? 0.0 : static_cast<double>(n);
  for (std::size_t i = 0; i < rels.size() && i < n; ++i) {
    if (exclude_uncounted && !counted[i]) continue;
    if (exclude_uncounted) denom += 1.0;
    if (rels[i] > 0) relevant += 1.0;
  }
  if (denom == 0.0) return std::nullopt;
  return relevant / denom;
}

struct MetricCheck {
  std::size_t instances = 0;
  double max_error = 0.0;
  std::size_t mismatched_presence = 0;
};

/// Compares HR/NDCG/Precision with the oracle on random binary (rels, N)
/// instances, with random unresolved positions for the real-only precision.
inline MetricCheck CompareWithOracle(std::size_t count, std::uint64_t seed) {
  Rng rng(seed);
  MetricCheck check;
  for (std::size_t k = 0; k < count; ++k) {
    RelevanceVector rv;
    std::size_t const size = rng.UniformIndex(16);
    std::size_t const n = 1 + rng.UniformIndex(12);
    std::vector<bool> counted;
    for (std::size_t i = 0; i < size; ++i) {
      bool const unresolved = rng.UniformIndex(5) == 0;
      rv.rels.push_back(unresolved ? 0 : static_cast<int>(rng.UniformIndex(2)));
      rv.sources.push_back(unresolved ? RelevanceSource::kUnresolved : RelevanceSource::kReal);
      counted.push_back(!unresolved);
    }
    auto err = [&](double a, double b) { check.max_error = std::max(check.max_error, std::fabs(a - b)); };
    err(HitAtN(rv, n), OracleHit(rv.rels, n));
    err(NdcgAtN(rv, n), OracleNdcg(rv.rels, n, false));
    if (std::min(n, size) <= 7) err(NdcgAtN(rv, n), OracleNdcg(rv.rels, n, true));
    for (auto mode : {EvalMode::kOracle, EvalMode::kRealOnly}) {
      auto got = PrecisionAtN(rv, n, mode);
      auto want = OraclePrecision(rv.rels, counted, n, mode == EvalMode::kRealOnly);
      if (got.has_value() != want.has_value()) {
        ++check.mismatched_presence;
      } else if (got) {
        err(*got, *want);
      }
    }
    ++check.instances;
  }
  return check;
}

}  // namespace critiquerec::testing

#endif  // CRITIQUEREC_TESTS_METRIC_ORACLE_HPP_
