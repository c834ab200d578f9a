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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <utility>

#include <gtest/gtest.h>

#include "critiquerec/critic.hpp"
#include "critiquerec/embedder.hpp"
#include "critiquerec/error.hpp"
#include "critiquerec/random.hpp"
#include "critiquerec/synthetic.hpp"
#include "fixtures.hpp"

namespace critiquerec {
namespace {

using testing::TempDir;

SparseVector Dense(std::vector<double> v) {
  SparseVector s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i] != 0.0) {
      s.index.push_back(static_cast<std::uint32_t>(i));
      s.value.push_back(v[i]);
    }
  }
  return s;
}

std::vector<double> ToDense(SparseVector const& s, int dim) {
  std::vector<double> v(static_cast<std::size_t>(dim), 0.0);
  for (std::size_t k = 0; k < s.index.size(); ++k) v[s.index[k]] = s.value[k];
  return v;
}

double Relu(double x) { return x > 0 ? x : 0.0; }

// Straightforward dense forward pass used as the reference.
std::vector<double> ReferenceForward(CriticModel const& m, EncodedExample const& ex) {
  int const D = m.dim(), H = m.hidden(), L = m.levels();
  auto W = [&](CriticModel::Block b, int i, int o) {
    return m.block(b)[static_cast<std::size_t>(i * m.Shape(b).cols + o)];
  };
  auto B = [&](CriticModel::Block b, int o) { return m.block(b)[static_cast<std::size_t>(o)]; };

  auto history = ex.history;
  std::sort(history.begin(), history.end(),
            [](auto const& a, auto const& b) { return a.item_id < b.item_id; });
  std::vector<double> user(static_cast<std::size_t>(H), 0.0);
  for (auto const& h : history) {
    auto x = ToDense(h.embedding, D);
    for (int l = 0; l < L; ++l) x.push_back(l == h.level ? 1.0 : 0.0);
    for (int o = 0; o < H; ++o) {
      double z = B(CriticModel::kHistBias, o);
      for (int i = 0; i < D + L; ++i) z += W(CriticModel::kHistWeight, i, o) * x[static_cast<std::size_t>(i)];
      user[static_cast<std::size_t>(o)] += Relu(z);
    }
  }
  for (double& u : user) u /= static_cast<double>(history.size());
  auto const e = ToDense(ex.candidate, D);
  std::vector<double> joint_in = user;
  for (int o = 0; o < H; ++o) {
    double z = B(CriticModel::kCandBias, o);
    for (int i = 0; i < D; ++i) z += W(CriticModel::kCandWeight, i, o) * e[static_cast<std::size_t>(i)];
    joint_in.push_back(Relu(z));
  }
  std::vector<double> joint(static_cast<std::size_t>(H));
  for (int o = 0; o < H; ++o) {
    double z = B(CriticModel::kFuseBias, o);
    for (int i = 0; i < 2 * H; ++i) z += W(CriticModel::kFuseWeight, i, o) * joint_in[static_cast<std::size_t>(i)];
    joint[static_cast<std::size_t>(o)] = Relu(z);
  }
  std::vector<double> logits(static_cast<std::size_t>(L));
  for (int o = 0; o < L; ++o) {
    double z = B(CriticModel::kOutBias, o);
    for (int i = 0; i < H; ++i) z += W(CriticModel::kOutWeight, i, o) * joint[static_cast<std::size_t>(i)];
    logits[static_cast<std::size_t>(o)] = z;
  }
  double const mx = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double& z : logits) sum += (z = std::exp(z - mx));
  for (double& z : logits) z /= sum;
  return logits;
}

RatingScale ThreeLevels() { return RatingScale(1.0, 3.0, 1.0); }

TEST(CriticForward, HandSetTinyModel) {
  CriticModel m(ThreeLevels(), 2, 2, "test");
  // Hand-picked weights, rows are inputs.
  std::vector<double> const hist{0.5, -0.25, 1.0, 0.75, 0.2, 0.1, -0.3, 0.4, 0.05, 0.6};
  std::copy(hist.begin(), hist.end(), m.block(CriticModel::kHistWeight).begin());
  m.block(CriticModel::kHistBias)[0] = 0.1;
  m.block(CriticModel::kHistBias)[1] = -0.2;
  std::vector<double> const cand{0.3, -0.6, 0.9, 0.2};
  std::copy(cand.begin(), cand.end(), m.block(CriticModel::kCandWeight).begin());
  m.block(CriticModel::kCandBias)[1] = 0.05;
  std::vector<double> const fuse{0.7, -0.1, 0.2, 0.4, -0.5, 0.3, 0.6, 0.8};
  std::copy(fuse.begin(), fuse.end(), m.block(CriticModel::kFuseWeight).begin());
  m.block(CriticModel::kFuseBias)[0] = 0.01;
  std::vector<double> const out{1.0, -1.0, 0.5, 0.25, 0.75, -0.5};
  std::copy(out.begin(), out.end(), m.block(CriticModel::kOutWeight).begin());
  m.block(CriticModel::kOutBias)[2] = 0.3;

  EncodedExample ex;
  ex.history = {{"b", Dense({0.6, 0.8}), 2}, {"a", Dense({1.0, 0.0}), 0}};
  ex.candidate = Dense({0.0, 1.0});
  auto const got = m.Distribution(ex);
  auto const want = ReferenceForward(m, ex);
  ASSERT_EQ(got.size(), 3u);
  for (int l = 0; l < 3; ++l) EXPECT_NEAR(got[l], want[l], 1e-12);
  EXPECT_NEAR(std::accumulate(got.begin(), got.end(), 0.0), 1.0, 1e-12);
}

TEST(CriticForward, ZeroModelIsUniform) {
  CriticModel m(RatingScale::Movies(), 4, 3, "test");
  EncodedExample ex;
  ex.history = {{"a", Dense({1, 0, 0, 0}), 3}};
  ex.candidate = Dense({0, 1, 0, 0});
  for (double p : m.Distribution(ex)) EXPECT_NEAR(p, 0.1, 1e-12);
  auto const s = m.ScoreFromDistribution("x", m.Distribution(ex));
  EXPECT_EQ(s.estimated_level, 0);
  EXPECT_EQ(s.estimated_rating, 0.5);
}

TEST(CriticForward, ZeroWeightsHistoryIsReluBias) {
  CriticModel m(ThreeLevels(), 2, 3, "test");
  auto b = m.block(CriticModel::kHistBias);
  b[0] = 0.5;
  b[1] = -0.5;
  b[2] = 2.0;
  std::vector<EncodedInteraction> h{{"a", Dense({1, 0}), 0}, {"b", Dense({0, 1}), 2}};
  auto const pooled = m.EncodeHistory(h);
  EXPECT_EQ(pooled, (std::vector<double>{0.5, 0.0, 2.0}));
}

CriticModel RandomModel(std::uint64_t seed, int D, int H, RatingScale scale,
                        std::string fingerprint = "test") {
  CriticModel m(scale, D, H, std::move(fingerprint));
  m.InitializeRandom(seed);
  Rng rng(seed + 1000);
  for (int b : {CriticModel::kHistBias, CriticModel::kCandBias, CriticModel::kFuseBias,
                CriticModel::kOutBias}) {
    for (double& v : m.block(static_cast<CriticModel::Block>(b))) v = rng.Uniform(-0.5, 0.5);
  }
  return m;
}

EncodedExample RandomExample(Rng& rng, int D, int L, int history) {
  EncodedExample ex;
  for (int j = 0; j < history; ++j) {
    std::vector<double> e(static_cast<std::size_t>(D));
    for (double& v : e) v = rng.Uniform(-1, 1);
    ex.history.push_back({"item" + std::to_string(rng.UniformIndex(1000000)), Dense(e),
                          static_cast<int>(rng.UniformIndex(static_cast<std::uint64_t>(L)))});
  }
  std::vector<double> e(static_cast<std::size_t>(D));
  for (double& v : e) v = rng.Uniform(-1, 1);
  ex.candidate = Dense(e);
  ex.label = static_cast<int>(rng.UniformIndex(static_cast<std::uint64_t>(L)));
  return ex;
}

TEST(CriticForward, SingleItemHistoryEqualsItsEncoding) {
  auto m = RandomModel(5, 4, 3, ThreeLevels());
  Rng rng(1);
  auto ex = RandomExample(rng, 4, 3, 1);
  auto pooled = m.EncodeHistory(ex.history);
  auto twice = ex.history;
  twice[0].item_id = "z";
  twice.push_back(ex.history[0]);
  auto pooled2 = m.EncodeHistory(twice);
  for (std::size_t i = 0; i < pooled.size(); ++i) EXPECT_NEAR(pooled[i], pooled2[i], 1e-15);
}

TEST(CriticForward, MatchesReferenceOnRandomModels) {
  Rng rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    int const D = 2 + static_cast<int>(rng.UniformIndex(6));
    int const H = 1 + static_cast<int>(rng.UniformIndex(6));
    auto m = RandomModel(static_cast<std::uint64_t>(trial), D, H, RatingScale::Books());
    auto ex = RandomExample(rng, D, 5, 1 + static_cast<int>(rng.UniformIndex(5)));
    auto got = m.Distribution(ex);
    auto want = ReferenceForward(m, ex);
    for (std::size_t l = 0; l < got.size(); ++l) EXPECT_NEAR(got[l], want[l], 1e-12);
  }
}

TEST(CriticForward, PermutationInvariant) {
  auto m = RandomModel(9, 6, 5, RatingScale::Books());
  Rng rng(2);
  auto ex = RandomExample(rng, 6, 5, 5);
  auto const base = m.Distribution(ex);
  for (int k = 0; k < 10; ++k) {
    rng.Shuffle(ex.history);
    EXPECT_EQ(m.Distribution(ex), base);
  }
}

TEST(CriticScore, LevelToRating) {
  CriticModel movies(RatingScale::Movies(), 2, 2, "t");
  std::vector<double> peaked(10, 0.05);
  peaked[7] = 0.55;
  auto s = movies.ScoreFromDistribution("x", peaked);
  EXPECT_EQ(s.estimated_level, 7);
  EXPECT_EQ(s.estimated_rating, 4.0);
  CriticModel books(RatingScale::Books(), 2, 2, "t");
  auto b = books.ScoreFromDistribution("x", {0.1, 0.1, 0.1, 0.1, 0.6});
  EXPECT_EQ(b.estimated_rating, 5.0);
  EXPECT_EQ(CriticModel::ArgMax(std::vector<double>{0.3, 0.3, 0.3, 0.1}), 0);
}

TEST(CriticGradient, MatchesCentralDifferences) {
  Rng rng(23);
  for (int trial = 0; trial < 5; ++trial) {
    int const D = 3 + trial % 4, H = 2 + trial % 5;
    auto m = RandomModel(100 + static_cast<std::uint64_t>(trial), D, H, RatingScale::Books());
    std::vector<EncodedExample> batch;
    for (int i = 0; i < 3; ++i) batch.push_back(RandomExample(rng, D, 5, 1 + i));
    auto const lg = ComputeLossAndGradient(m, batch);
    EXPECT_NEAR(lg.loss, ComputeLoss(m, batch), 1e-12);
    double const h = 1e-5;
    double worst = 0.0;
    auto params = m.parameters();
    for (std::size_t i = 0; i < params.size(); ++i) {
      double const orig = params[i];
      params[i] = orig + h;
      double const up = ComputeLoss(m, batch);
      params[i] = orig - h;
      double const down = ComputeLoss(m, batch);
      params[i] = orig;
      double const numeric = (up - down) / (2 * h);
      double const denom = std::max({std::abs(numeric), std::abs(lg.gradient[i]), 1e-7});
      worst = std::max(worst, std::abs(numeric - lg.gradient[i]) / denom);
    }
    EXPECT_LT(worst, 1e-4) << "trial " << trial;
  }
}

TEST(CriticTrain, MemorizesSingleSample) {
  Rng rng(4);
  std::vector<EncodedExample> train{RandomExample(rng, 8, 5, 3)};
  TrainConfig cfg;
  cfg.epochs = 200;
  cfg.learning_rate = 0.01;
  cfg.hidden = 16;
  cfg.patience = 1000;
  auto m = TrainCritic(train, {}, cfg, RatingScale::Books(), 8, "test");
  EXPECT_LT(ComputeLoss(m, train), 0.01);
  EXPECT_FALSE(m.training_log().empty());
}

TEST(CriticTrain, LabelOutOfRange) {
  Rng rng(4);
  std::vector<EncodedExample> train{RandomExample(rng, 4, 5, 2)};
  train[0].label = 7;
  EXPECT_THROW(TrainCritic(train, {}, TrainConfig{}, RatingScale::Books(), 4, "test"), Error);
  EXPECT_THROW(TrainCritic(std::span<EncodedExample const>{}, {}, TrainConfig{},
                           RatingScale::Books(), 4, "test"),
               Error);
}

struct SmallBenchmark {
  Dataset data = MakeClusterDataset({2, 30, 30, 40, 0.1, 3});
  HashedEmbeddingProvider provider{64};
  std::vector<LabeledExample> train, val;

  SmallBenchmark() {
    auto split = SplitUsers(data, {0.8, 0.2, 0.0}, 3);
    train = MakeExamples(split.train, 20, 0, 3);
    val = MakeExamples(split.val, 20, 0, 3);
  }
};

TEST(CriticTrain, DeterministicUnderSeed) {
  SmallBenchmark b;
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.hidden = 16;
  auto m1 = TrainCritic(b.train, b.val, cfg, b.provider, *b.data.items, b.data.scale);
  auto m2 = TrainCritic(b.train, b.val, cfg, b.provider, *b.data.items, b.data.scale);
  EXPECT_TRUE(m1 == m2);
  auto o = BuildOracle(b.train, b.val, cfg, b.provider, *b.data.items, b.data.scale);
  EXPECT_EQ(o.tag(), "oracle");
  EXPECT_TRUE(std::equal(o.parameters().begin(), o.parameters().end(), m1.parameters().begin()));
  // The chosen epoch never scores below the initialization on validation.
  auto const& log = m1.training_log();
  double best = 0.0;
  for (auto const& e : log) best = std::max(best, e.val_accuracy);
  ExampleEncoder enc(b.provider, *b.data.items, b.data.scale);
  auto const eval = EvaluateCritic(m1, enc.EncodeAll(b.val));
  EXPECT_GE(eval.accuracy, log.front().val_accuracy);
  EXPECT_GE(best, log.front().val_accuracy);
}

TEST(CriticModelBehavior, IdenticalHistoriesIdenticalScores) {
  SmallBenchmark b;
  auto m = RandomModel(3, 64, 8, b.data.scale, b.provider.Fingerprint());
  UserHistory h1 = b.train[0].history;
  UserHistory h2 = h1;
  h2.user_id = "someone-else";
  for (auto const& item : b.data.items->items()) {
    EXPECT_EQ(m.PredictDistribution(b.provider, *b.data.items, h1, item),
              m.PredictDistribution(b.provider, *b.data.items, h2, item));
  }
}

TEST(CriticModelBehavior, UnseenItemGetsValidDistribution) {
  SmallBenchmark b;
  auto m = RandomModel(3, 64, 8, b.data.scale, b.provider.Fingerprint());
  auto const novel = testing::MakeItem("nope", "An Item Nobody Rated (2031)");
  auto const d = m.PredictDistribution(b.provider, *b.data.items, b.train[0].history, novel);
  double sum = 0.0;
  for (double p : d) {
    EXPECT_GT(p, 0.0);
    EXPECT_LT(p, 1.0);
    sum += p;
  }
  EXPECT_NEAR(sum, 1.0, 1e-9);
  EXPECT_THROW(m.PredictDistribution(b.provider, *b.data.items, UserHistory{}, novel), Error);
}

TEST(EvaluateCritic, SevenOfTen) {
  CriticModel m(RatingScale::Books(), 2, 1, "test");
  m.block(CriticModel::kOutBias)[2] = 5.0;  // always predicts level 2
  std::vector<EncodedExample> set;
  for (int i = 0; i < 10; ++i) {
    EncodedExample ex;
    ex.history = {{"a", Dense({1, 0}), 0}};
    ex.candidate = Dense({0, 1});
    ex.label = i < 7 ? 2 : 0;
    set.push_back(ex);
  }
  auto const e = EvaluateCritic(m, set);
  EXPECT_EQ(e.samples, 10u);
  EXPECT_DOUBLE_EQ(e.micro_accuracy, 0.7);
  EXPECT_DOUBLE_EQ(e.micro_recall, 0.7);
  EXPECT_DOUBLE_EQ(e.accuracy, 0.7);
  for (auto& ex : set) ex.label = 2;
  auto const all = EvaluateCritic(m, set);
  EXPECT_EQ(all.micro_accuracy, 1.0);
  EXPECT_EQ(all.micro_recall, 1.0);
}

TEST(ModelFile, RoundTripBitIdentical) {
  TempDir dir("model");
  SmallBenchmark b;
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.hidden = 8;
  auto const m = TrainCritic(b.train, b.val, cfg, b.provider, *b.data.items, b.data.scale);
  SaveModel(m, dir / "c.bin");
  auto const loaded = LoadModel(dir / "c.bin");
  EXPECT_TRUE(loaded == m);
  ExampleEncoder enc(b.provider, *b.data.items, b.data.scale);
  auto const encoded = enc.EncodeAll(b.val);
  for (std::size_t i = 0; i < std::min<std::size_t>(100, encoded.size()); ++i) {
    EXPECT_EQ(loaded.Distribution(encoded[i]), m.Distribution(encoded[i]));
  }
}

TEST(ModelFile, BadMagic) {
  TempDir dir("model");
  testing::WriteText(dir / "junk.bin", "NOTAMODEL-----------------");
  EXPECT_THROW(LoadModel(dir / "junk.bin"), FormatError);
}

TEST(ModelFile, FingerprintMismatch) {
  TempDir dir("model");
  HashedEmbeddingProvider hashed(256);
  CriticModel m(RatingScale::Books(), 256, 4, hashed.Fingerprint());
  SaveModel(m, dir / "c.bin");
  RemoteEmbeddingConfig rc;
  rc.url = "http://127.0.0.1:9/v1/embeddings";
  rc.model = "text-embedding";
  rc.dim = 1536;
  RemoteEmbeddingProvider remote(rc);
  LoadModelOptions opts;
  opts.expected_fingerprint = remote.Fingerprint();
  EXPECT_THROW(LoadModel(dir / "c.bin", opts), FingerprintMismatch);
  opts.allow_fingerprint_mismatch = true;
  EXPECT_NO_THROW(LoadModel(dir / "c.bin", opts));
  EXPECT_THROW(m.CheckProvider(remote), FingerprintMismatch);
  EXPECT_NO_THROW(m.CheckProvider(hashed));
}

}  // namespace
}  // namespace critiquerec
