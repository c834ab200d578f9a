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

#ifndef CRITIQUEREC_METRICS_HPP_
#define CRITIQUEREC_METRICS_HPP_

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "critiquerec/catalog.hpp"
#include "critiquerec/critic.hpp"
#include "critiquerec/critique_loop.hpp"

namespace critiquerec {

enum class EvalMode { kRealOnly, kOracle, kCandidateSet };

std::string_view EvalModeName(EvalMode mode);
std::optional<EvalMode> ParseEvalMode(std::string_view name);

enum class RelevanceSource { kReal, kOracle, kCandidate, kUnresolved };

std::string_view RelevanceSourceName(RelevanceSource source);

struct RelevanceVector {
  std::vector<int> rels;
  std::vector<RelevanceSource> sources;

  std::size_t size() const { return rels.size(); }
};

struct Relevance {
  int rel = 0;
  RelevanceSource source = RelevanceSource::kUnresolved;
};

struct RelevanceContext {
  Catalog const* catalog = nullptr;
  /// Required in oracle mode.
  CriticModel const* oracle = nullptr;
  ExampleEncoder const* oracle_encoder = nullptr;
  /// A rating at or above this value is relevant.
  double threshold = 4.0;
};

Relevance ResolveRelevance(EvalInstance const& instance, std::string_view raw_title, EvalMode mode,
                           RelevanceContext const& ctx);
RelevanceVector ResolveList(EvalInstance const& instance, RankedList const& list, EvalMode mode,
                            RelevanceContext const& ctx);

enum class Gain { kExponential, kLinear };

/// 1 if any of the first min(n, size) positions is relevant.
double HitAtN(RelevanceVector const& rv, std::size_t n);
double HrAtN(std::span<RelevanceVector const> users, std::size_t n);
double DcgAtN(std::span<int const> rels, std::size_t n, Gain gain = Gain::kExponential);
/// Zero when the window holds no relevant item.
double NdcgAtN(RelevanceVector const& rv, std::size_t n, Gain gain = Gain::kExponential);
/// In real-only mode unresolved positions leave both numerator and
/// denominator; nullopt when nothing in the window resolved.
std::optional<double> PrecisionAtN(RelevanceVector const& rv, std::size_t n, EvalMode mode);

struct MetricAtN {
  int n = 0;
  double hr = 0.0;
  double ndcg = 0.0;
  double precision = 0.0;
  std::size_t hr_users = 0;
  std::size_t ndcg_users = 0;
  std::size_t precision_users = 0;
  /// Lists shorter than n, evaluated for HR only.
  std::size_t short_lists = 0;

  bool operator==(MetricAtN const&) const = default;
};

struct LatencySummary {
  std::size_t calls = 0;
  double mean_ms = 0.0;
  double p50_ms = 0.0;
  double p90_ms = 0.0;
  double p99_ms = 0.0;
  double max_ms = 0.0;

  bool operator==(LatencySummary const&) const = default;
};

/// Nearest-rank percentile of an ascending sample; 0 for an empty one.
double NearestRankPercentile(std::span<double const> sorted, double p);
LatencySummary SummarizeLatency(std::vector<double> latencies_ms);

struct LoopMetrics {
  int loop = 0;
  std::size_t users = 0;
  std::vector<MetricAtN> at_n;
  LatencySummary latency;
  std::size_t entries = 0;
  std::size_t unresolved = 0;
  double unresolved_fraction = 0.0;
  std::size_t carried_forward = 0;

  bool operator==(LoopMetrics const&) const = default;
};

struct CriticSummary {
  std::size_t samples = 0;
  double micro_accuracy = 0.0;
  double micro_recall = 0.0;
  double accuracy = 0.0;

  bool operator==(CriticSummary const&) const = default;
};

struct MetricsReport {
  EvalMode mode = EvalMode::kOracle;
  std::vector<int> ns;
  std::size_t users_total = 0;
  std::size_t users_truncated = 0;
  std::size_t users_skipped = 0;
  std::vector<LoopMetrics> loops;
  std::optional<CriticSummary> critic;

  bool empty() const { return loops.empty() || loops.front().users == 0; }
  LoopMetrics const* Loop(int index) const;
  MetricAtN const* At(int loop, int n) const;
  bool operator==(MetricsReport const&) const = default;
};

/// Unweighted per-user means for every loop index present in the traces,
/// reduced in trace order. A trace contributes to loop l only if it holds
/// list l.
MetricsReport Aggregate(std::span<LoopTrace const> traces, EvalMode mode,
                        RelevanceContext const& ctx, std::vector<int> ns = {3, 5, 10},
                        std::size_t skipped_users = 0);

std::string ReportToJson(MetricsReport const& report);
MetricsReport ReportFromJson(std::string_view text);
std::string RenderReportTable(MetricsReport const& report);
std::string RenderReportCsv(MetricsReport const& report);

struct LabeledReport {
  std::string label;
  MetricsReport report;
};

/// One row per (loop, N), one column group per run.
std::string RenderComparisonTable(std::span<LabeledReport const> runs);

}  // namespace critiquerec

#endif  // CRITIQUEREC_METRICS_HPP_
