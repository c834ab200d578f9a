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

#include "critiquerec/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "critiquerec/error.hpp"
#include "json.hpp"

namespace critiquerec {

std::string_view EvalModeName(EvalMode mode) {
  switch (mode) {
    case EvalMode::kRealOnly: return "real_only";
    case EvalMode::kOracle: return "oracle";
    case EvalMode::kCandidateSet: return "candidate_set";
  }
  return "oracle";
}

std::optional<EvalMode> ParseEvalMode(std::string_view name) {
  if (name == "real_only") return EvalMode::kRealOnly;
  if (name == "oracle") return EvalMode::kOracle;
  if (name == "candidate_set" || name == "candidate") return EvalMode::kCandidateSet;
  return std::nullopt;
}

std::string_view RelevanceSourceName(RelevanceSource source) {
  switch (source) {
    case RelevanceSource::kReal: return "real";
    case RelevanceSource::kOracle: return "oracle";
    case RelevanceSource::kCandidate: return "candidate";
    case RelevanceSource::kUnresolved: return "unresolved";
  }
  return "unresolved";
}

Relevance ResolveRelevance(EvalInstance const& instance, std::string_view raw_title, EvalMode mode,
                           RelevanceContext const& ctx) {
  if (ctx.catalog == nullptr) throw Error("relevance resolution needs a catalog");
  auto const res = ctx.catalog->Resolve(raw_title);
  Item const* item = res.item;

  if (mode == EvalMode::kCandidateSet) {
    if (!instance.candidate_ids) throw ConfigError("candidate-set mode needs a candidate set");
    auto const& ids = *instance.candidate_ids;
    if (item == nullptr || std::find(ids.begin(), ids.end(), item->item_id) == ids.end()) {
      return {0, RelevanceSource::kUnresolved};
    }
  }
  if (item != nullptr) {
    if (auto rating = instance.HeldOutRating(item->item_id)) {
      return {*rating >= ctx.threshold - 1e-9 ? 1 : 0, RelevanceSource::kReal};
    }
  }
  switch (mode) {
    case EvalMode::kCandidateSet:
      return {0, RelevanceSource::kCandidate};
    case EvalMode::kRealOnly:
      return {0, RelevanceSource::kUnresolved};
    case EvalMode::kOracle: {
      if (ctx.oracle == nullptr || ctx.oracle_encoder == nullptr) {
        throw ConfigError("oracle mode needs an oracle model");
      }
      Item const synthetic = SyntheticItem(raw_title);
      auto const example = ctx.oracle_encoder->Encode(instance.history, item ? *item : synthetic);
      auto const dist = ctx.oracle->Distribution(example);
      double const rating = ctx.oracle->scale().RatingOf(CriticModel::ArgMax(dist));
      return {rating >= ctx.threshold - 1e-9 ? 1 : 0, RelevanceSource::kOracle};
    }
  }
  return {0, RelevanceSource::kUnresolved};
}

RelevanceVector ResolveList(EvalInstance const& instance, RankedList const& list, EvalMode mode,
                            RelevanceContext const& ctx) {
  RelevanceVector rv;
  for (auto const& e : list.entries) {
    auto const r = ResolveRelevance(instance, e.raw_title, mode, ctx);
    rv.rels.push_back(r.rel);
    rv.sources.push_back(r.source);
  }
  return rv;
}

double HitAtN(RelevanceVector const& rv, std::size_t n) {
  std::size_t const m = std::min(n, rv.size());
  for (std::size_t i = 0; i < m; ++i) {
    if (rv.rels[i] > 0) return 1.0;
  }
  return 0.0;
}

double HrAtN(std::span<RelevanceVector const> users, std::size_t n) {
  if (users.empty()) return 0.0;
  double hits = 0.0;
  for (auto const& rv : users) hits += HitAtN(rv, n);
  return hits / static_cast<double>(users.size());
}

double DcgAtN(std::span<int const> rels, std::size_t n, Gain gain) {
  std::size_t const m = std::min(n, rels.size());
  double dcg = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    double const g = gain == Gain::kExponential ? std::exp2(rels[i]) - 1.0
                                                : static_cast<double>(rels[i]);
    dcg += g / std::log2(static_cast<double>(i) + 2.0);
  }
  return dcg;
}

double NdcgAtN(RelevanceVector const& rv, std::size_t n, Gain gain) {
  std::size_t const m = std::min(n, rv.size());
  std::vector<int> window(rv.rels.begin(), rv.rels.begin() + static_cast<std::ptrdiff_t>(m));
  double const dcg = DcgAtN(window, m, gain);
  std::sort(window.begin(), window.end(), std::greater<>());
  double const idcg = DcgAtN(window, m, gain);
  return idcg > 0.0 ? dcg / idcg : 0.0;
}

std::optional<double> PrecisionAtN(RelevanceVector const& rv, std::size_t n, EvalMode mode) {
  std::size_t const m = std::min(n, rv.size());
  std::size_t relevant = 0;
  std::size_t resolved = 0;
  for (std::size_t i = 0; i < m; ++i) {
    bool const unresolved = rv.sources.size() > i && rv.sources[i] == RelevanceSource::kUnresolved;
    if (mode == EvalMode::kRealOnly && unresolved) continue;
    ++resolved;
    if (rv.rels[i] > 0) ++relevant;
  }
  if (mode == EvalMode::kRealOnly) {
    if (resolved == 0) return std::nullopt;
    return static_cast<double>(relevant) / static_cast<double>(resolved);
  }
  if (n == 0) return std::nullopt;
  return static_cast<double>(relevant) / static_cast<double>(n);
}

double NearestRankPercentile(std::span<double const> sorted, double p) {
  if (sorted.empty()) return 0.0;
  auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * static_cast<double>(sorted.size())));
  rank = std::clamp<std::size_t>(rank, 1, sorted.size());
  return sorted[rank - 1];
}

LatencySummary SummarizeLatency(std::vector<double> latencies_ms) {
  LatencySummary s;
  s.calls = latencies_ms.size();
  if (latencies_ms.empty()) return s;
  double sum = 0.0;
  for (double v : latencies_ms) sum += v;
  std::sort(latencies_ms.begin(), latencies_ms.end());
  s.mean_ms = sum / static_cast<double>(latencies_ms.size());
  s.p50_ms = NearestRankPercentile(latencies_ms, 50);
  s.p90_ms = NearestRankPercentile(latencies_ms, 90);
  s.p99_ms = NearestRankPercentile(latencies_ms, 99);
  s.max_ms = latencies_ms.back();
  return s;
}

LoopMetrics const* MetricsReport::Loop(int index) const {
  for (auto const& l : loops) {
    if (l.loop == index) return &l;
  }
  return nullptr;
}

MetricAtN const* MetricsReport::At(int loop, int n) const {
  auto const* l = Loop(loop);
  if (l == nullptr) return nullptr;
  for (auto const& m : l->at_n) {
    if (m.n == n) return &m;
  }
  return nullptr;
}

MetricsReport Aggregate(std::span<LoopTrace const> traces, EvalMode mode,
                        RelevanceContext const& ctx, std::vector<int> ns,
                        std::size_t skipped_users) {
  for (int n : ns) {
    if (n < 1) throw ConfigError("metric cutoffs must be >= 1");
  }
  MetricsReport report;
  report.mode = mode;
  report.ns = std::move(ns);
  report.users_total = traces.size();
  report.users_skipped = skipped_users;

  std::size_t max_lists = 0;
  for (auto const& t : traces) {
    if (t.truncated) ++report.users_truncated;
    max_lists = std::max(max_lists, t.lists.size());
  }

  for (std::size_t loop = 0; loop < max_lists; ++loop) {
    LoopMetrics lm;
    lm.loop = static_cast<int>(loop);
    std::vector<RelevanceVector> rvs;
    std::vector<double> latencies;
    for (auto const& t : traces) {
      if (t.calls.size() > loop) latencies.push_back(t.calls[loop].latency_ms);
      if (t.lists.size() <= loop) continue;
      rvs.push_back(ResolveList(t.instance, t.lists[loop], mode, ctx));
      for (int cf : t.carried_forward) {
        if (cf == static_cast<int>(loop)) ++lm.carried_forward;
      }
    }
    lm.users = rvs.size();
    for (auto const& rv : rvs) {
      lm.entries += rv.size();
      for (auto s : rv.sources) {
        if (s == RelevanceSource::kUnresolved) ++lm.unresolved;
      }
    }
    lm.unresolved_fraction =
        lm.entries ? static_cast<double>(lm.unresolved) / static_cast<double>(lm.entries) : 0.0;
    lm.latency = SummarizeLatency(std::move(latencies));

    for (int n : report.ns) {
      MetricAtN m;
      m.n = n;
      auto const un = static_cast<std::size_t>(n);
      double hr = 0.0, ndcg = 0.0, prec = 0.0;
      for (auto const& rv : rvs) {
        ++m.hr_users;
        hr += HitAtN(rv, un);
        if (rv.size() < un) {
          ++m.short_lists;
          continue;
        }
        ++m.ndcg_users;
        ndcg += NdcgAtN(rv, un);
        if (auto p = PrecisionAtN(rv, un, mode)) {
          ++m.precision_users;
          prec += *p;
        }
      }
      if (m.hr_users) m.hr = hr / static_cast<double>(m.hr_users);
      if (m.ndcg_users) m.ndcg = ndcg / static_cast<double>(m.ndcg_users);
      if (m.precision_users) m.precision = prec / static_cast<double>(m.precision_users);
      lm.at_n.push_back(m);
    }
    report.loops.push_back(std::move(lm));
  }
  return report;
}

// ---------------------------------------------------------------------------
// Rendering

namespace {

using ojson = nlohmann::ordered_json;

std::string Fixed(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string Pad(std::string s, std::size_t width, bool left = false) {
  if (s.size() >= width) return s;
  std::string fill(width - s.size(), ' ');
  return left ? s + fill : fill + s;
}

ojson LatencyJson(LatencySummary const& l) {
  return {{"calls", l.calls},   {"mean_ms", l.mean_ms}, {"p50_ms", l.p50_ms},
          {"p90_ms", l.p90_ms}, {"p99_ms", l.p99_ms},   {"max_ms", l.max_ms}};
}

LatencySummary LatencyFromJson(ojson const& j) {
  LatencySummary l;
  l.calls = j.at("calls").get<std::size_t>();
  l.mean_ms = j.at("mean_ms").get<double>();
  l.p50_ms = j.at("p50_ms").get<double>();
  l.p90_ms = j.at("p90_ms").get<double>();
  l.p99_ms = j.at("p99_ms").get<double>();
  l.max_ms = j.at("max_ms").get<double>();
  return l;
}

}  // namespace

std::string ReportToJson(MetricsReport const& r) {
  ojson j;
  j["mode"] = EvalModeName(r.mode);
  j["ns"] = r.ns;
  j["users_total"] = r.users_total;
  j["users_truncated"] = r.users_truncated;
  j["users_skipped"] = r.users_skipped;
  auto loops = ojson::array();
  for (auto const& l : r.loops) {
    ojson lj;
    lj["loop"] = l.loop;
    lj["users"] = l.users;
    auto metrics = ojson::array();
    for (auto const& m : l.at_n) {
      metrics.push_back({{"n", m.n},
                         {"hr", m.hr},
                         {"ndcg", m.ndcg},
                         {"precision", m.precision},
                         {"hr_users", m.hr_users},
                         {"ndcg_users", m.ndcg_users},
                         {"precision_users", m.precision_users},
                         {"short_lists", m.short_lists}});
    }
    lj["metrics"] = metrics;
    lj["latency"] = LatencyJson(l.latency);
    lj["entries"] = l.entries;
    lj["unresolved"] = l.unresolved;
    lj["unresolved_fraction"] = l.unresolved_fraction;
    lj["carried_forward"] = l.carried_forward;
    loops.push_back(lj);
  }
  j["loops"] = loops;
  if (r.critic) {
    j["critic"] = {{"samples", r.critic->samples},
                   {"micro_accuracy", r.critic->micro_accuracy},
                   {"micro_recall", r.critic->micro_recall},
                   {"accuracy", r.critic->accuracy}};
  } else {
    j["critic"] = nullptr;
  }
  return j.dump(2) + "\n";
}

MetricsReport ReportFromJson(std::string_view text) {
  MetricsReport r;
  try {
    auto const j = ojson::parse(text);
    auto mode = ParseEvalMode(j.at("mode").get<std::string>());
    if (!mode) throw FormatError("unknown evaluation mode in report");
    r.mode = *mode;
    r.ns = j.at("ns").get<std::vector<int>>();
    r.users_total = j.at("users_total").get<std::size_t>();
    r.users_truncated = j.at("users_truncated").get<std::size_t>();
    r.users_skipped = j.at("users_skipped").get<std::size_t>();
    for (auto const& lj : j.at("loops")) {
      LoopMetrics l;
      l.loop = lj.at("loop").get<int>();
      l.users = lj.at("users").get<std::size_t>();
      for (auto const& mj : lj.at("metrics")) {
        MetricAtN m;
        m.n = mj.at("n").get<int>();
        m.hr = mj.at("hr").get<double>();
        m.ndcg = mj.at("ndcg").get<double>();
        m.precision = mj.at("precision").get<double>();
        m.hr_users = mj.at("hr_users").get<std::size_t>();
        m.ndcg_users = mj.at("ndcg_users").get<std::size_t>();
        m.precision_users = mj.at("precision_users").get<std::size_t>();
        m.short_lists = mj.at("short_lists").get<std::size_t>();
        l.at_n.push_back(m);
      }
      l.latency = LatencyFromJson(lj.at("latency"));
      l.entries = lj.at("entries").get<std::size_t>();
      l.unresolved = lj.at("unresolved").get<std::size_t>();
      l.unresolved_fraction = lj.at("unresolved_fraction").get<double>();
      l.carried_forward = lj.at("carried_forward").get<std::size_t>();
      r.loops.push_back(std::move(l));
    }
    if (!j.at("critic").is_null()) {
      auto const& c = j.at("critic");
      r.critic = CriticSummary{c.at("samples").get<std::size_t>(),
                               c.at("micro_accuracy").get<double>(),
                               c.at("micro_recall").get<double>(), c.at("accuracy").get<double>()};
    }
  } catch (nlohmann::json::exception const& e) {
    throw FormatError(std::string("invalid metrics report: ") + e.what());
  }
  return r;
}

std::string RenderReportTable(MetricsReport const& r) {
  std::ostringstream out;
  out << "mode: " << EvalModeName(r.mode) << "  users: " << r.users_total
      << "  truncated: " << r.users_truncated << "  skipped: " << r.users_skipped << "\n";
  if (r.empty()) {
    out << "no successful users; report is empty\n";
    return out.str();
  }
  out << "\n"
      << Pad("loop", 4) << Pad("N", 5) << Pad("HR", 9) << Pad("NDCG", 9) << Pad("Precision", 11)
      << Pad("users", 8) << Pad("short", 7) << "\n";
  for (auto const& l : r.loops) {
    for (auto const& m : l.at_n) {
      out << Pad(std::to_string(l.loop), 4) << Pad(std::to_string(m.n), 5) << Pad(Fixed(m.hr), 9)
          << Pad(Fixed(m.ndcg), 9) << Pad(Fixed(m.precision), 11)
          << Pad(std::to_string(m.ndcg_users), 8) << Pad(std::to_string(m.short_lists), 7)
          << "\n";
    }
  }
  out << "\nlatency (ms)\n"
      << Pad("loop", 4) << Pad("calls", 7) << Pad("mean", 10) << Pad("p50", 10) << Pad("p90", 10)
      << Pad("p99", 10) << Pad("max", 10) << "\n";
  for (auto const& l : r.loops) {
    out << Pad(std::to_string(l.loop), 4) << Pad(std::to_string(l.latency.calls), 7)
        << Pad(Fixed(l.latency.mean_ms, 1), 10) << Pad(Fixed(l.latency.p50_ms, 1), 10)
        << Pad(Fixed(l.latency.p90_ms, 1), 10) << Pad(Fixed(l.latency.p99_ms, 1), 10)
        << Pad(Fixed(l.latency.max_ms, 1), 10) << "\n";
  }
  out << "\nresolution\n"
      << Pad("loop", 4) << Pad("entries", 9) << Pad("unresolved", 12) << Pad("fraction", 10)
      << Pad("carried", 9) << "\n";
  for (auto const& l : r.loops) {
    out << Pad(std::to_string(l.loop), 4) << Pad(std::to_string(l.entries), 9)
        << Pad(std::to_string(l.unresolved), 12) << Pad(Fixed(l.unresolved_fraction), 10)
        << Pad(std::to_string(l.carried_forward), 9) << "\n";
  }
  if (r.critic) {
    out << "\ncritic: samples " << r.critic->samples << "  micro-acc "
        << Fixed(r.critic->micro_accuracy) << "  micro-recall " << Fixed(r.critic->micro_recall)
        << "  accuracy " << Fixed(r.critic->accuracy) << "\n";
  }
  return out.str();
}

std::string RenderReportCsv(MetricsReport const& r) {
  std::ostringstream out;
  out << "mode,loop,n,hr,ndcg,precision,hr_users,ndcg_users,precision_users,short_lists,"
         "latency_p50_ms,latency_p90_ms,latency_p99_ms,unresolved_fraction\n";
  for (auto const& l : r.loops) {
    for (auto const& m : l.at_n) {
      out << EvalModeName(r.mode) << ',' << l.loop << ',' << m.n << ',' << Fixed(m.hr, 6) << ','
          << Fixed(m.ndcg, 6) << ',' << Fixed(m.precision, 6) << ',' << m.hr_users << ','
          << m.ndcg_users << ',' << m.precision_users << ',' << m.short_lists << ','
          << Fixed(l.latency.p50_ms, 3) << ',' << Fixed(l.latency.p90_ms, 3) << ','
          << Fixed(l.latency.p99_ms, 3) << ',' << Fixed(l.unresolved_fraction, 6) << "\n";
    }
  }
  return out.str();
}

std::string RenderComparisonTable(std::span<LabeledReport const> runs) {
  std::ostringstream out;
  std::size_t constexpr kCol = 9;
  std::size_t label_width = kCol * 3;
  out << Pad("", 9);
  for (auto const& run : runs) {
    std::string label = run.label.size() > label_width - 2 ? run.label.substr(0, label_width - 2)
                                                           : run.label;
    out << " | " << Pad(label, label_width, true);
  }
  out << "\n" << Pad("loop", 4) << Pad("N", 5);
  for (std::size_t i = 0; i < runs.size(); ++i) {
    out << " | " << Pad("HR", kCol) << Pad("NDCG", kCol) << Pad("Prec", kCol);
  }
  out << "\n";

  std::vector<std::pair<int, int>> rows;
  for (auto const& run : runs) {
    for (auto const& l : run.report.loops) {
      for (auto const& m : l.at_n) {
        std::pair<int, int> key{l.loop, m.n};
        if (std::find(rows.begin(), rows.end(), key) == rows.end()) rows.push_back(key);
      }
    }
  }
  std::sort(rows.begin(), rows.end());
  for (auto const& [loop, n] : rows) {
    out << Pad(std::to_string(loop), 4) << Pad(std::to_string(n), 5);
    for (auto const& run : runs) {
      out << " | ";
      if (auto const* m = run.report.At(loop, n)) {
        out << Pad(Fixed(m->hr), kCol) << Pad(Fixed(m->ndcg), kCol)
            << Pad(Fixed(m->precision), kCol);
      } else {
        out << Pad("-", kCol) << Pad("-", kCol) << Pad("-", kCol);
      }
    }
    out << "\n";
  }
  out << "\nlatency p50/p90/p99 (ms)\n";
  int max_loop = -1;
  for (auto const& row : rows) max_loop = std::max(max_loop, row.first);
  for (int loop = 0; loop <= max_loop; ++loop) {
    out << Pad(std::to_string(loop), 4) << Pad("", 5);
    for (auto const& run : runs) {
      out << " | ";
      if (auto const* l = run.report.Loop(loop)) {
        out << Pad(Fixed(l->latency.p50_ms, 1) + "/" + Fixed(l->latency.p90_ms, 1) + "/" +
                       Fixed(l->latency.p99_ms, 1),
                   label_width, true);
      } else {
        out << Pad("-", label_width, true);
      }
    }
    out << "\n";
  }
  return out.str();
}

}  // namespace critiquerec
