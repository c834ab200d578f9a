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

#include "critiquerec/critic.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>

#include "critiquerec/error.hpp"
#include "critiquerec/random.hpp"
#include "json.hpp"

namespace critiquerec {

SparseVector ToSparse(Embedding const& e) {
  SparseVector s;
  for (std::size_t i = 0; i < e.values.size(); ++i) {
    if (e.values[i] != 0.0) {
      s.index.push_back(static_cast<std::uint32_t>(i));
      s.value.push_back(e.values[i]);
    }
  }
  return s;
}

void ConfusionCounts::Add(int predicted, int truth) {
  auto const p = static_cast<std::size_t>(predicted);
  auto const t = static_cast<std::size_t>(truth);
  if (p == t) {
    ++tp[t];
  } else {
    ++fp[p];
    ++fn[t];
  }
}

CriticModel::CriticModel(RatingScale scale, int dim, int hidden, std::string fingerprint,
                         std::string tag)
    : scale_(scale),
      dim_(dim),
      hidden_(hidden),
      fingerprint_(std::move(fingerprint)),
      tag_(std::move(tag)) {
  if (dim <= 0 || hidden <= 0) throw ConfigError("critic dimensions must be positive");
  offsets_[0] = 0;
  for (int b = 0; b < kBlockCount; ++b) {
    auto const shape = Shape(static_cast<Block>(b));
    offsets_[static_cast<std::size_t>(b) + 1] =
        offsets_[static_cast<std::size_t>(b)] +
        static_cast<std::size_t>(shape.rows) * static_cast<std::size_t>(shape.cols);
  }
  params_.assign(offsets_.back(), 0.0);
}

CriticModel::BlockShape CriticModel::Shape(Block b) const {
  int const d = dim_, h = hidden_, l = scale_.levels();
  switch (b) {
    case kHistWeight: return {"hist_weight", d + l, h};
    case kHistBias: return {"hist_bias", 1, h};
    case kCandWeight: return {"cand_weight", d, h};
    case kCandBias: return {"cand_bias", 1, h};
    case kFuseWeight: return {"fuse_weight", 2 * h, h};
    case kFuseBias: return {"fuse_bias", 1, h};
    case kOutWeight: return {"out_weight", h, l};
    case kOutBias: return {"out_bias", 1, l};
    case kBlockCount: break;
  }
  throw std::out_of_range("bad critic parameter block");
}

std::span<double> CriticModel::block(Block b) {
  auto const i = static_cast<std::size_t>(b);
  return std::span<double>(params_).subspan(offsets_[i], offsets_[i + 1] - offsets_[i]);
}

std::span<double const> CriticModel::block(Block b) const {
  auto const i = static_cast<std::size_t>(b);
  return std::span<double const>(params_).subspan(offsets_[i], offsets_[i + 1] - offsets_[i]);
}

void CriticModel::InitializeRandom(std::uint64_t seed) {
  Rng rng(Mix64(seed ^ 0x696e6974ULL));
  std::fill(params_.begin(), params_.end(), 0.0);
  for (Block b : {kHistWeight, kCandWeight, kFuseWeight, kOutWeight}) {
    auto const shape = Shape(b);
    // Input layers use a fixed fan-in of 8.
    double const fan_in = (b == kHistWeight || b == kCandWeight) ? 8.0 : shape.rows;
    double const limit = std::sqrt(6.0 / fan_in);
    for (double& w : block(b)) w = rng.Uniform(-limit, limit);
  }
}

void CriticModel::SnapToFloat32() {
  for (double& p : params_) p = static_cast<double>(static_cast<float>(p));
}

namespace {

inline void Axpy(double a, double const* x, double* y, int n) {
  for (int i = 0; i < n; ++i) y[i] += a * x[i];
}

inline double Relu(double x) { return x > 0.0 ? x : 0.0; }

// Intermediate activations of one forward pass, kept for backprop.
struct Workspace {
  std::vector<std::size_t> order;
  std::vector<double> hist_pre;  // m x H
  std::vector<double> joint;     // 2H: [pooled ; cand]
  std::vector<double> cand_pre;  // H
  std::vector<double> fuse_pre;  // H
  std::vector<double> fuse;      // H
  std::vector<double> probs;     // L
};

void CheckSparse(SparseVector const& v, int dim) {
  for (auto i : v.index) {
    if (static_cast<int>(i) >= dim) {
      throw FingerprintMismatch("embedding index " + std::to_string(i) +
                                " exceeds model dimension " + std::to_string(dim));
    }
  }
}

std::vector<std::size_t> SortedOrder(std::span<EncodedInteraction const> history) {
  std::vector<std::size_t> order(history.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (history[a].item_id != history[b].item_id) {
      return history[a].item_id < history[b].item_id;
    }
    return history[a].level < history[b].level;
  });
  return order;
}

void EncodeHistoryInto(CriticModel const& m, std::span<EncodedInteraction const> history,
                       Workspace& ws) {
  if (history.empty()) throw Error("critic needs a non-empty interaction history");
  int const d = m.dim(), h = m.hidden(), l = m.levels();
  auto const w = m.block(CriticModel::kHistWeight);
  auto const b = m.block(CriticModel::kHistBias);
  ws.order = SortedOrder(history);
  ws.hist_pre.assign(history.size() * static_cast<std::size_t>(h), 0.0);
  ws.joint.assign(2 * static_cast<std::size_t>(h), 0.0);
  double* pooled = ws.joint.data();
  for (std::size_t j = 0; j < ws.order.size(); ++j) {
    auto const& inter = history[ws.order[j]];
    if (inter.level < 0 || inter.level >= l) {
      throw Error("history rating level " + std::to_string(inter.level) + " out of range");
    }
    CheckSparse(inter.embedding, d);
    double* pre = ws.hist_pre.data() + j * static_cast<std::size_t>(h);
    std::copy(b.begin(), b.end(), pre);
    for (std::size_t k = 0; k < inter.embedding.index.size(); ++k) {
      Axpy(inter.embedding.value[k], w.data() + inter.embedding.index[k] * h, pre, h);
    }
    Axpy(1.0, w.data() + static_cast<std::size_t>(d + inter.level) * h, pre, h);
    for (int o = 0; o < h; ++o) pooled[o] += Relu(pre[o]);
  }
  double const inv = 1.0 / static_cast<double>(history.size());
  for (int o = 0; o < h; ++o) pooled[o] *= inv;
}

void Forward(CriticModel const& m, EncodedExample const& ex, Workspace& ws) {
  int const h = m.hidden(), l = m.levels();
  EncodeHistoryInto(m, ex.history, ws);
  CheckSparse(ex.candidate, m.dim());

  auto const wc = m.block(CriticModel::kCandWeight);
  auto const bc = m.block(CriticModel::kCandBias);
  ws.cand_pre.assign(bc.begin(), bc.end());
  for (std::size_t k = 0; k < ex.candidate.index.size(); ++k) {
    Axpy(ex.candidate.value[k], wc.data() + ex.candidate.index[k] * h, ws.cand_pre.data(), h);
  }
  for (int o = 0; o < h; ++o) ws.joint[static_cast<std::size_t>(h + o)] = Relu(ws.cand_pre[static_cast<std::size_t>(o)]);

  auto const wf = m.block(CriticModel::kFuseWeight);
  auto const bf = m.block(CriticModel::kFuseBias);
  ws.fuse_pre.assign(bf.begin(), bf.end());
  for (int i = 0; i < 2 * h; ++i) {
    double const x = ws.joint[static_cast<std::size_t>(i)];
    if (x != 0.0) Axpy(x, wf.data() + static_cast<std::size_t>(i) * h, ws.fuse_pre.data(), h);
  }
  ws.fuse.resize(static_cast<std::size_t>(h));
  for (int o = 0; o < h; ++o) ws.fuse[static_cast<std::size_t>(o)] = Relu(ws.fuse_pre[static_cast<std::size_t>(o)]);

  auto const wo = m.block(CriticModel::kOutWeight);
  auto const bo = m.block(CriticModel::kOutBias);
  ws.probs.assign(bo.begin(), bo.end());
  for (int i = 0; i < h; ++i) {
    double const x = ws.fuse[static_cast<std::size_t>(i)];
    if (x != 0.0) Axpy(x, wo.data() + static_cast<std::size_t>(i) * l, ws.probs.data(), l);
  }
  double const max_logit = *std::max_element(ws.probs.begin(), ws.probs.end());
  double sum = 0.0;
  for (double& z : ws.probs) {
    z = std::exp(z - max_logit);
    sum += z;
  }
  for (double& z : ws.probs) z /= sum;
}

// Adds scale * d(-log p[label])/d(params) into grad; returns the loss.
double Backward(CriticModel const& m, EncodedExample const& ex, Workspace& ws, double scale,
                std::vector<double>& grad, std::array<std::size_t, CriticModel::kBlockCount>
                                               const& off) {
  int const d = m.dim(), h = m.hidden(), l = m.levels();
  auto const label = static_cast<std::size_t>(ex.label);
  double const loss = -std::log(std::max(ws.probs[label], 1e-300));

  std::vector<double> dlogit(ws.probs);
  dlogit[label] -= 1.0;
  for (double& g : dlogit) g *= scale;

  double* g_wo = grad.data() + off[CriticModel::kOutWeight];
  double* g_bo = grad.data() + off[CriticModel::kOutBias];
  auto const wo = m.block(CriticModel::kOutWeight);
  std::vector<double> dfuse(static_cast<std::size_t>(h), 0.0);
  for (int k = 0; k < l; ++k) g_bo[k] += dlogit[static_cast<std::size_t>(k)];
  for (int i = 0; i < h; ++i) {
    double const x = ws.fuse[static_cast<std::size_t>(i)];
    double const* wrow = wo.data() + static_cast<std::size_t>(i) * l;
    double acc = 0.0;
    for (int k = 0; k < l; ++k) {
      acc += wrow[k] * dlogit[static_cast<std::size_t>(k)];
      g_wo[static_cast<std::size_t>(i) * l + k] += x * dlogit[static_cast<std::size_t>(k)];
    }
    dfuse[static_cast<std::size_t>(i)] = ws.fuse_pre[static_cast<std::size_t>(i)] > 0.0 ? acc : 0.0;
  }

  double* g_wf = grad.data() + off[CriticModel::kFuseWeight];
  double* g_bf = grad.data() + off[CriticModel::kFuseBias];
  auto const wf = m.block(CriticModel::kFuseWeight);
  Axpy(1.0, dfuse.data(), g_bf, h);
  std::vector<double> djoint(2 * static_cast<std::size_t>(h), 0.0);
  for (int i = 0; i < 2 * h; ++i) {
    double const x = ws.joint[static_cast<std::size_t>(i)];
    double const* wrow = wf.data() + static_cast<std::size_t>(i) * h;
    double acc = 0.0;
    for (int o = 0; o < h; ++o) acc += wrow[o] * dfuse[static_cast<std::size_t>(o)];
    djoint[static_cast<std::size_t>(i)] = acc;
    if (x != 0.0) Axpy(x, dfuse.data(), g_wf + static_cast<std::size_t>(i) * h, h);
  }

  double* g_wc = grad.data() + off[CriticModel::kCandWeight];
  double* g_bc = grad.data() + off[CriticModel::kCandBias];
  std::vector<double> dcand(static_cast<std::size_t>(h));
  for (int o = 0; o < h; ++o) {
    dcand[static_cast<std::size_t>(o)] = ws.cand_pre[static_cast<std::size_t>(o)] > 0.0
                                             ? djoint[static_cast<std::size_t>(h + o)]
                                             : 0.0;
  }
  Axpy(1.0, dcand.data(), g_bc, h);
  for (std::size_t k = 0; k < ex.candidate.index.size(); ++k) {
    Axpy(ex.candidate.value[k], dcand.data(), g_wc + ex.candidate.index[k] * h, h);
  }

  double* g_wh = grad.data() + off[CriticModel::kHistWeight];
  double* g_bh = grad.data() + off[CriticModel::kHistBias];
  double const inv = 1.0 / static_cast<double>(ex.history.size());
  std::vector<double> dpre(static_cast<std::size_t>(h));
  for (std::size_t j = 0; j < ws.order.size(); ++j) {
    auto const& inter = ex.history[ws.order[j]];
    double const* pre = ws.hist_pre.data() + j * static_cast<std::size_t>(h);
    for (int o = 0; o < h; ++o) {
      dpre[static_cast<std::size_t>(o)] = pre[o] > 0.0 ? djoint[static_cast<std::size_t>(o)] * inv : 0.0;
    }
    Axpy(1.0, dpre.data(), g_bh, h);
    for (std::size_t k = 0; k < inter.embedding.index.size(); ++k) {
      Axpy(inter.embedding.value[k], dpre.data(), g_wh + inter.embedding.index[k] * h, h);
    }
    Axpy(1.0, dpre.data(), g_wh + static_cast<std::size_t>(d + inter.level) * h, h);
  }
  return loss;
}

std::array<std::size_t, CriticModel::kBlockCount> BlockOffsets(CriticModel const& m) {
  std::array<std::size_t, CriticModel::kBlockCount> off{};
  auto const base = m.parameters().data();
  for (int b = 0; b < CriticModel::kBlockCount; ++b) {
    off[static_cast<std::size_t>(b)] =
        static_cast<std::size_t>(m.block(static_cast<CriticModel::Block>(b)).data() - base);
  }
  return off;
}

void CheckLabel(CriticModel const& m, EncodedExample const& ex) {
  if (ex.label < 0 || ex.label >= m.levels()) {
    throw Error("training label " + std::to_string(ex.label) + " outside [0, " +
                std::to_string(m.levels()) + ")");
  }
}

}  // namespace

std::vector<double> CriticModel::EncodeHistory(std::span<EncodedInteraction const> history) const {
  Workspace ws;
  EncodeHistoryInto(*this, history, ws);
  ws.joint.resize(static_cast<std::size_t>(hidden_));
  return ws.joint;
}

std::vector<double> CriticModel::Distribution(EncodedExample const& example) const {
  Workspace ws;
  Forward(*this, example, ws);
  return ws.probs;
}

void CriticModel::CheckProvider(EmbeddingProvider const& p) const {
  if (p.Fingerprint() != fingerprint_) {
    throw FingerprintMismatch("critic was trained with embeddings '" + fingerprint_ +
                              "' but the configured provider is '" + p.Fingerprint() + "'");
  }
}

std::vector<double> CriticModel::PredictDistribution(EmbeddingProvider const& p,
                                                     ItemTable const& items,
                                                     UserHistory const& history,
                                                     Item const& item) const {
  CheckProvider(p);
  ExampleEncoder encoder(p, items, scale_);
  return Distribution(encoder.Encode(history, item));
}

CriticScore CriticModel::PredictRating(EmbeddingProvider const& p, ItemTable const& items,
                                       UserHistory const& history, Item const& item) const {
  return ScoreFromDistribution(item.item_id, PredictDistribution(p, items, history, item));
}

int CriticModel::ArgMax(std::span<double const> distribution) {
  int best = 0;
  for (std::size_t i = 1; i < distribution.size(); ++i) {
    if (distribution[i] > distribution[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
  }
  return best;
}

CriticScore CriticModel::ScoreFromDistribution(std::string item_id,
                                               std::vector<double> distribution) const {
  CriticScore score;
  score.item_id = std::move(item_id);
  score.estimated_level = ArgMax(distribution);
  score.estimated_rating = scale_.RatingOf(score.estimated_level);
  score.distribution = std::move(distribution);
  return score;
}

ExampleEncoder::ExampleEncoder(EmbeddingProvider const& provider, ItemTable const& items,
                               RatingScale scale)
    : provider_(provider), items_(items), scale_(scale) {}

SparseVector ExampleEncoder::EncodeItem(Item const& item) const {
  auto const text = ItemText(item);
  {
    std::lock_guard lock(mu_);
    if (auto it = cache_.find(text); it != cache_.end()) return it->second;
  }
  auto sparse = ToSparse(provider_.Embed(text));
  std::lock_guard lock(mu_);
  return cache_.emplace(text, std::move(sparse)).first->second;
}

std::vector<EncodedInteraction> ExampleEncoder::EncodeHistory(UserHistory const& history) const {
  std::vector<EncodedInteraction> out;
  out.reserve(history.interactions.size());
  for (auto const& inter : history.interactions) {
    auto const level = scale_.LevelOf(inter.rating);
    if (!level) {
      throw Error("history rating " + RatingScale::Format(inter.rating) + " is off-scale");
    }
    out.push_back({inter.item_id, EncodeItem(items_.At(inter.item_id)), *level});
  }
  std::sort(out.begin(), out.end(), [](auto const& a, auto const& b) {
    return a.item_id != b.item_id ? a.item_id < b.item_id : a.level < b.level;
  });
  return out;
}

EncodedExample ExampleEncoder::Encode(UserHistory const& history, Item const& item,
                                      int label) const {
  return EncodedExample{EncodeHistory(history), EncodeItem(item), label};
}

std::vector<EncodedExample> ExampleEncoder::EncodeAll(
    std::span<LabeledExample const> examples) const {
  std::vector<EncodedExample> out;
  out.reserve(examples.size());
  for (auto const& ex : examples) out.push_back(Encode(ex.history, ex.target, ex.level));
  return out;
}

LossAndGradient ComputeLossAndGradient(CriticModel const& model,
                                       std::span<EncodedExample const> batch) {
  LossAndGradient out;
  out.gradient.assign(model.parameters().size(), 0.0);
  if (batch.empty()) return out;
  auto const off = BlockOffsets(model);
  double const scale = 1.0 / static_cast<double>(batch.size());
  Workspace ws;
  for (auto const& ex : batch) {
    CheckLabel(model, ex);
    Forward(model, ex, ws);
    out.loss += Backward(model, ex, ws, scale, out.gradient, off);
  }
  out.loss *= scale;
  return out;
}

double ComputeLoss(CriticModel const& model, std::span<EncodedExample const> batch) {
  if (batch.empty()) return 0.0;
  Workspace ws;
  double sum = 0.0;
  for (auto const& ex : batch) {
    CheckLabel(model, ex);
    Forward(model, ex, ws);
    sum += -std::log(std::max(ws.probs[static_cast<std::size_t>(ex.label)], 1e-300));
  }
  return sum / static_cast<double>(batch.size());
}

CriticEvaluation EvaluateCritic(CriticModel const& model,
                                std::span<EncodedExample const> testset) {
  CriticEvaluation ev;
  ev.counts = ConfusionCounts(model.levels());
  Workspace ws;
  for (auto const& ex : testset) {
    CheckLabel(model, ex);
    Forward(model, ex, ws);
    int const pred = CriticModel::ArgMax(ws.probs);
    ev.counts.Add(pred, ex.label);
    ++ev.samples;
    if (pred == ex.label) ++ev.correct;
  }
  std::uint64_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < ev.counts.tp.size(); ++i) {
    tp += ev.counts.tp[i];
    fp += ev.counts.fp[i];
    fn += ev.counts.fn[i];
  }
  ev.micro_accuracy = tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
  ev.micro_recall = tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
  ev.accuracy = ev.samples > 0
                    ? static_cast<double>(ev.correct) / static_cast<double>(ev.samples)
                    : 0.0;
  return ev;
}

CriticModel TrainCritic(std::span<EncodedExample const> train,
                        std::span<EncodedExample const> val, TrainConfig const& cfg,
                        RatingScale const& scale, int dim, std::string fingerprint,
                        std::string tag) {
  if (train.empty()) throw Error("training set is empty");
  if (!(cfg.learning_rate > 0.0) || cfg.epochs < 1 || cfg.batch_size < 1) {
    throw ConfigError("training needs learning_rate > 0, epochs >= 1 and batch_size >= 1");
  }
  CriticModel model(scale, dim, cfg.hidden, std::move(fingerprint), std::move(tag));
  for (auto const& ex : train) CheckLabel(model, ex);
  for (auto const& ex : val) CheckLabel(model, ex);
  model.InitializeRandom(cfg.seed);

  auto const off = BlockOffsets(model);
  auto params = model.parameters();
  std::size_t const n_params = params.size();
  std::vector<double> grad(n_params), m1(n_params, 0.0), m2(n_params, 0.0);
  constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;
  double beta1_t = 1.0, beta2_t = 1.0;

  auto score_of = [&](EpochLog const& log) {
    return val.empty() ? -log.train_loss : log.val_accuracy;
  };

  std::vector<EpochLog> log;
  log.push_back({0, ComputeLoss(model, train),
                 val.empty() ? 0.0 : EvaluateCritic(model, val).accuracy});
  std::vector<double> best(params.begin(), params.end());
  double best_score = score_of(log.back());
  int since_best = 0;

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(Mix64(cfg.seed ^ 0x74726169ULL));
  Workspace ws;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    rng.Shuffle(order);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(cfg.batch_size)) {
      std::size_t const end =
          std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      double const scale_factor = 1.0 / static_cast<double>(end - start);
      std::fill(grad.begin(), grad.end(), 0.0);
      for (std::size_t i = start; i < end; ++i) {
        auto const& ex = train[order[i]];
        Forward(model, ex, ws);
        double const loss = Backward(model, ex, ws, scale_factor, grad, off);
        if (!std::isfinite(loss)) {
          throw NumericError("non-finite loss at epoch " + std::to_string(epoch) +
                             ", example " + std::to_string(order[i]));
        }
        loss_sum += loss;
      }
      beta1_t *= kBeta1;
      beta2_t *= kBeta2;
      double const step = cfg.learning_rate * std::sqrt(1.0 - beta2_t) / (1.0 - beta1_t);
      for (std::size_t p = 0; p < n_params; ++p) {
        m1[p] = kBeta1 * m1[p] + (1.0 - kBeta1) * grad[p];
        m2[p] = kBeta2 * m2[p] + (1.0 - kBeta2) * grad[p] * grad[p];
        params[p] -= step * m1[p] / (std::sqrt(m2[p]) + kEps);
      }
    }
    double const epoch_loss = loss_sum / static_cast<double>(train.size());
    if (!std::isfinite(epoch_loss)) {
      throw NumericError("non-finite mean loss at epoch " + std::to_string(epoch));
    }
    log.push_back({epoch, epoch_loss, val.empty() ? 0.0 : EvaluateCritic(model, val).accuracy});
    if (score_of(log.back()) > best_score) {
      best_score = score_of(log.back());
      best.assign(params.begin(), params.end());
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      break;
    }
  }

  std::copy(best.begin(), best.end(), params.begin());
  model.SnapToFloat32();
  model.set_training_log(std::move(log));
  return model;
}

CriticModel TrainCritic(std::span<LabeledExample const> train,
                        std::span<LabeledExample const> val, TrainConfig const& cfg,
                        EmbeddingProvider const& provider, ItemTable const& items,
                        RatingScale const& scale) {
  ExampleEncoder encoder(provider, items, scale);
  auto const enc_train = encoder.EncodeAll(train);
  auto const enc_val = encoder.EncodeAll(val);
  return TrainCritic(enc_train, enc_val, cfg, scale, provider.dim(), provider.Fingerprint());
}

CriticModel BuildOracle(std::span<LabeledExample const> train,
                        std::span<LabeledExample const> val, TrainConfig const& cfg,
                        EmbeddingProvider const& provider, ItemTable const& items,
                        RatingScale const& scale) {
  auto model = TrainCritic(train, val, cfg, provider, items, scale);
  model.set_tag("oracle");
  return model;
}

std::vector<LabeledExample> MakeExamples(Dataset const& d, std::size_t history_size,
                                         std::size_t targets_per_user, std::uint64_t seed,
                                         std::size_t* skipped_users) {
  std::vector<LabeledExample> out;
  std::size_t skipped = 0;
  for (auto const& user : d.users) {
    auto inst = SampleEvalInstance(user, history_size, seed);
    if (!inst) {
      ++skipped;
      continue;
    }
    auto targets = inst->held_out;
    Rng rng(DeriveSeed(seed, "targets:" + user.user_id));
    rng.Shuffle(targets);
    if (targets_per_user > 0 && targets.size() > targets_per_user) {
      targets.resize(targets_per_user);
    }
    for (auto const& t : targets) {
      out.push_back({inst->history, d.items->At(t.item_id), *d.scale.LevelOf(t.rating)});
    }
  }
  if (skipped_users != nullptr) *skipped_users = skipped;
  return out;
}

namespace {

constexpr char kModelMagic[8] = {'C', 'R', 'Q', 'C', 'R', 'T', 'C', '\0'};

template <typename T>
void WriteLe(std::ostream& out, T value) {
  static_assert(std::endian::native == std::endian::little,
                "on-disk formats assume a little-endian host");
  out.write(reinterpret_cast<char const*>(&value), sizeof value);
}

template <typename T>
T ReadLe(std::istream& in, std::filesystem::path const& path) {
  T value{};
  if (!in.read(reinterpret_cast<char*>(&value), sizeof value)) {
    throw FormatError("critic model file " + path.string() + " is truncated");
  }
  return value;
}

nlohmann::json LogToJson(std::vector<EpochLog> const& log) {
  auto arr = nlohmann::json::array();
  for (auto const& e : log) {
    arr.push_back({{"epoch", e.epoch}, {"train_loss", e.train_loss},
                   {"val_accuracy", e.val_accuracy}});
  }
  return arr;
}

std::string DigestHex(std::string_view text) {
  std::ostringstream os;
  os << std::hex << Fnv1a64(text);
  return os.str();
}

}  // namespace

void SaveModel(CriticModel const& model, std::filesystem::path const& path) {
  nlohmann::json header;
  header["format_version"] = CriticModel::kFormatVersion;
  header["tag"] = model.tag();
  header["scale"] = {{"min", model.scale().min_rating()},
                     {"max", model.scale().max_rating()},
                     {"step", model.scale().step()}};
  header["dim"] = model.dim();
  header["hidden"] = model.hidden();
  header["levels"] = model.levels();
  header["fingerprint"] = model.fingerprint();
  header["layout"] = "input-major";
  auto blocks = nlohmann::json::array();
  for (int b = 0; b < CriticModel::kBlockCount; ++b) {
    auto const shape = model.Shape(static_cast<CriticModel::Block>(b));
    blocks.push_back({{"name", shape.name}, {"shape", {shape.rows, shape.cols}}});
  }
  header["blocks"] = blocks;
  auto const log = LogToJson(model.training_log());
  header["training_log"] = log;
  header["training_log_digest"] = DigestHex(log.dump());
  std::string const text = header.dump();

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write critic model to " + path.string());
  out.write(kModelMagic, sizeof kModelMagic);
  WriteLe(out, static_cast<std::uint32_t>(CriticModel::kFormatVersion));
  WriteLe(out, static_cast<std::uint32_t>(text.size()));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (double p : model.parameters()) WriteLe(out, static_cast<float>(p));
  if (!out) throw FormatError("failed writing critic model to " + path.string());
}

CriticModel LoadModel(std::filesystem::path const& path, LoadModelOptions const& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot read critic model " + path.string());
  char magic[8];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kModelMagic, sizeof magic) != 0) {
    throw FormatError(path.string() + " is not a critic model file (bad magic bytes)");
  }
  auto const version = ReadLe<std::uint32_t>(in, path);
  if (version != static_cast<std::uint32_t>(CriticModel::kFormatVersion)) {
    throw FormatError("critic model " + path.string() + " has format version " +
                      std::to_string(version) + ", expected " +
                      std::to_string(CriticModel::kFormatVersion));
  }
  auto const header_len = ReadLe<std::uint32_t>(in, path);
  std::string text(header_len, '\0');
  if (!in.read(text.data(), header_len)) {
    throw FormatError("critic model file " + path.string() + " is truncated");
  }
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(text);
  } catch (std::exception const& e) {
    throw FormatError("critic model header is not valid JSON: " + std::string(e.what()));
  }

  auto const fingerprint = header.at("fingerprint").get<std::string>();
  if (options.expected_fingerprint && *options.expected_fingerprint != fingerprint &&
      !options.allow_fingerprint_mismatch) {
    throw FingerprintMismatch("critic model " + path.string() + " was trained with '" +
                              fingerprint + "' but the configured provider is '" +
                              *options.expected_fingerprint + "'");
  }
  auto const& s = header.at("scale");
  CriticModel model(RatingScale(s.at("min").get<double>(), s.at("max").get<double>(),
                                s.at("step").get<double>()),
                    header.at("dim").get<int>(), header.at("hidden").get<int>(), fingerprint,
                    header.at("tag").get<std::string>());
  for (double& p : model.parameters()) p = ReadLe<float>(in, path);

  std::vector<EpochLog> log;
  for (auto const& e : header.value("training_log", nlohmann::json::array())) {
    log.push_back({e.at("epoch").get<int>(), e.at("train_loss").get<double>(),
                   e.at("val_accuracy").get<double>()});
  }
  model.set_training_log(std::move(log));
  return model;
}

}  // namespace critiquerec
