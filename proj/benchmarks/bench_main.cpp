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

#include <string>
#include <vector>

#include <benchmark/benchmark.h>

#include "critiquerec/critic.hpp"
#include "critiquerec/embedder.hpp"
#include "critiquerec/llm_gateway.hpp"
#include "critiquerec/metrics.hpp"
#include "critiquerec/random.hpp"
#include "critiquerec/synthetic.hpp"

namespace critiquerec {
namespace {

void BM_NdcgAt10(benchmark::State& state) {
  Rng rng(1);
  std::vector<RelevanceVector> users(1000);
  for (auto& rv : users) {
    for (int i = 0; i < 10; ++i) {
      rv.rels.push_back(static_cast<int>(rng.UniformIndex(2)));
      rv.sources.push_back(RelevanceSource::kReal);
    }
  }
  for (auto _ : state) {
    double total = 0.0;
    for (auto const& rv : users) total += NdcgAtN(rv, 10);
    benchmark::DoNotOptimize(total);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(users.size()));
}
BENCHMARK(BM_NdcgAt10);

void BM_HashedEmbed(benchmark::State& state) {
  HashedEmbeddingProvider provider(static_cast<int>(state.range(0)));
  std::string const text =
      "The Stellar Fleet (1984). authors: Ada Marsh. genre: space opera.";
  for (auto _ : state) benchmark::DoNotOptimize(provider.Embed(text));
}
BENCHMARK(BM_HashedEmbed)->Arg(256)->Arg(1536);

struct CriticBench {
  Dataset data = MakeClusterDataset(SyntheticConfig{});
  HashedEmbeddingProvider provider{256};
  std::vector<EncodedExample> examples;
  CriticModel model{RatingScale::Books(), 256, 128, provider.Fingerprint()};

  CriticBench() {
    ExampleEncoder encoder(provider, *data.items, data.scale);
    auto const labeled = MakeExamples(data, 20, 1, 3);
    examples = encoder.EncodeAll(labeled);
    model.InitializeRandom(5);
  }
};

CriticBench& Bench() {
  static CriticBench b;
  return b;
}

void BM_CriticForward(benchmark::State& state) {
  auto& b = Bench();
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(b.model.Distribution(b.examples[i++ % b.examples.size()]));
  }
}
BENCHMARK(BM_CriticForward);

void BM_CriticGradientBatch64(benchmark::State& state) {
  auto& b = Bench();
  std::span<EncodedExample const> batch(b.examples.data(), 64);
  for (auto _ : state) benchmark::DoNotOptimize(ComputeLossAndGradient(b.model, batch));
  state.SetItemsProcessed(state.iterations() * 64);
}
BENCHMARK(BM_CriticGradientBatch64);

void BM_ParseRankedList(benchmark::State& state) {
  std::string text = "Here are my recommendations:\n\n";
  for (int i = 1; i <= 10; ++i) {
    text += std::to_string(i) + ". **Some Movie Title " + std::to_string(i) +
            " (1999)** - a short reason\n";
  }
  for (auto _ : state) benchmark::DoNotOptimize(ParseRankedList(text, 10));
}
BENCHMARK(BM_ParseRankedList);

}  // namespace
}  // namespace critiquerec

BENCHMARK_MAIN();
