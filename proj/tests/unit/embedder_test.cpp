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

#include <cmath>

#include <gtest/gtest.h>

#include "critiquerec/embedder.hpp"
#include "critiquerec/random.hpp"
#include "fixtures.hpp"

namespace critiquerec {
namespace {

using testing::MakeItem;

double Norm(Embedding const& e) {
  double s = 0.0;
  for (double v : e.values) s += v * v;
  return std::sqrt(s);
}

TEST(HashedEmbedding, EmptyTextIsZero) {
  HashedEmbeddingProvider p(256);
  auto e = p.Embed("");
  ASSERT_EQ(e.dim(), 256);
  for (double v : e.values) EXPECT_EQ(v, 0.0);
}

TEST(HashedEmbedding, Deterministic) {
  HashedEmbeddingProvider p(256);
  EXPECT_EQ(p.Embed("jurassic park").values, p.Embed("jurassic park").values);
  EXPECT_EQ(HashedEmbeddingProvider(256).Embed("jurassic park").values,
            p.Embed("jurassic park").values);
}

TEST(HashedEmbedding, BagOfTokens) {
  HashedEmbeddingProvider p(256);
  EXPECT_EQ(p.Embed("park jurassic").values, p.Embed("jurassic park").values);
  EXPECT_EQ(p.Embed("Jurassic, PARK!").values, p.Embed("jurassic park").values);
}

TEST(HashedEmbedding, MatchesDirectConstruction) {
  HashedEmbeddingProvider p(64);
  std::string const text = "the quick brown fox jumps over the lazy dog";
  std::vector<double> expect(64, 0.0);
  for (auto const& t : Tokenize(text)) {
    expect[p.IndexOf(t)] += p.SignOf(t);
  }
  double n = 0.0;
  for (double v : expect) n += v * v;
  n = std::sqrt(n);
  for (double& v : expect) v /= n;
  auto const got = p.Embed(text).values;
  for (std::size_t i = 0; i < expect.size(); ++i) EXPECT_NEAR(got[i], expect[i], 1e-15);
  EXPECT_EQ(Tokenize(text).size(), 9u);
}

TEST(HashedEmbedding, UnitNormProperty) {
  HashedEmbeddingProvider p(256);
  Rng rng(11);
  std::string const alphabet = "abcdefgh ,.!";
  for (int trial = 0; trial < 200; ++trial) {
    std::string text;
    auto const len = rng.UniformIndex(40);
    for (std::uint64_t i = 0; i < len; ++i) text += alphabet[rng.UniformIndex(alphabet.size())];
    double const n = Norm(p.Embed(text));
    EXPECT_TRUE(n == 0.0 || std::abs(n - 1.0) < 1e-9) << text << " " << n;
  }
}

TEST(EmbedItem, TitleOnlyAddsPeriod) {
  HashedEmbeddingProvider p(256);
  auto const item = MakeItem("x", "Heat (1995)");
  EXPECT_EQ(ItemText(item), "Heat (1995).");
  EXPECT_EQ(EmbedItem(p, item).values, p.Embed("Heat (1995).").values);
}

TEST(EmbedItem, TextOnly) {
  HashedEmbeddingProvider p(256);
  auto a = MakeItem("a1", "Heat (1995)", {{"directedBy", "Michael Mann"}});
  auto b = MakeItem("b2", "Heat (1995)", {{"directedBy", "Michael Mann"}});
  EXPECT_EQ(EmbedItem(p, a).values, EmbedItem(p, b).values);
}

TEST(EmbedItem, CaseStudyItemUnitNorm) {
  HashedEmbeddingProvider p(256);
  auto const item = MakeItem("m", "Airheads (1994)",
                             {{"directedBy", "Michael Lehmann"},
                              {"starring", "Steve Buscemi, Brendan Fraser, Adam Sandler"}});
  EXPECT_EQ(ItemText(item),
            "Airheads (1994). directedBy: Michael Lehmann. starring: Steve Buscemi, Brendan "
            "Fraser, Adam Sandler.");
  auto const e = EmbedItem(p, item);
  EXPECT_EQ(e.dim(), 256);
  EXPECT_NEAR(Norm(e), 1.0, 1e-9);
}

TEST(HashedEmbedding, FingerprintNamesDimension) {
  EXPECT_NE(HashedEmbeddingProvider(256).Fingerprint(), HashedEmbeddingProvider(128).Fingerprint());
  EXPECT_NE(HashedEmbeddingProvider(256).Fingerprint().find("d=256"), std::string::npos);
}

}  // namespace
}  // namespace critiquerec
