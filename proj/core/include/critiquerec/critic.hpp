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

#ifndef CRITIQUEREC_CRITIC_HPP_
#define CRITIQUEREC_CRITIC_HPP_

#include <array>
#include <cstdint>
#include <filesystem>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "critiquerec/catalog.hpp"
#include "critiquerec/embedder.hpp"
#include "critiquerec/rating_scale.hpp"

namespace critiquerec {

/// Non-zero entries of an embedding. Hashed embeddings have a handful of
/// non-zeros out of D, which keeps the input layers cheap.
struct SparseVector {
  std::vector<std::uint32_t> index;
  std::vector<double> value;
};

SparseVector ToSparse(Embedding const& e);

struct EncodedInteraction {
  std::string item_id;
  SparseVector embedding;
  int level = 0;
};

struct EncodedExample {
  std::vector<EncodedInteraction> history;
  SparseVector candidate;
  int label = -1;  // rating level; -1 when unlabeled
};

/// A (history, target item, true level) triple before embedding.
struct LabeledExample {
  UserHistory history;
  Item target;
  int level = 0;
};

struct TrainConfig {
  double learning_rate = 1e-3;
  int epochs = 30;
  int batch_size = 64;
  int hidden = 128;
  std::uint64_t seed = 42;
  /// Epochs without validation improvement before stopping.
  int patience = 5;
};

struct EpochLog {
  int epoch = 0;  // 0 is the untrained initialization
  double train_loss = 0.0;
  double val_accuracy = 0.0;

  friend bool operator==(EpochLog const&, EpochLog const&) = default;
};

struct CriticScore {
  std::string item_id;
  std::vector<double> distribution;
  int estimated_level = 0;
  double estimated_rating = 0.0;
};

/// Per-class confusion counts for single-label multiclass evaluation.
struct ConfusionCounts {
  std::vector<std::uint64_t> tp, fp, fn;

  explicit ConfusionCounts(int levels = 0)
      : tp(static_cast<std::size_t>(levels)),
        fp(static_cast<std::size_t>(levels)),
        fn(static_cast<std::size_t>(levels)) {}
  void Add(int predicted, int truth);
};

struct CriticEvaluation {
  ConfusionCounts counts;
  std::uint64_t samples = 0;
  std::uint64_t correct = 0;
  double micro_accuracy = 0.0;  // sum TP / sum (TP + FP)
  double micro_recall = 0.0;    // sum TP / sum (TP + FN)
  double accuracy = 0.0;        // correct / samples
};

/// Recommendation critic: estimates a user's rating level for an item from
/// the user's rated history.
///
///   item_j  = ReLU(W_hist^T [e_j ; onehot(level_j)] + b_hist)   (D+L -> H)
///   user    = mean_j item_j, summed in ascending item_id order
///   cand    = ReLU(W_cand^T e_o + b_cand)                       (D -> H)
///   joint   = ReLU(W_fuse^T [user ; cand] + b_fuse)             (2H -> H)
///   p       = softmax(W_out^T joint + b_out)                    (H -> L)
///
/// Weights are stored input-major: W[i * out + o].
class CriticModel {
 public:
  enum Block : int {
    kHistWeight,
    kHistBias,
    kCandWeight,
    kCandBias,
    kFuseWeight,
    kFuseBias,
    kOutWeight,
    kOutBias,
    kBlockCount
  };

  struct BlockShape {
    std::string_view name;
    int rows;  // inputs (1 for biases)
    int cols;  // outputs
  };

  static constexpr int kFormatVersion = 1;

  /// All parameters start at zero; call InitializeRandom before training.
  CriticModel(RatingScale scale, int dim, int hidden, std::string fingerprint,
              std::string tag = "critic");

  RatingScale const& scale() const { return scale_; }
  int dim() const { return dim_; }
  int hidden() const { return hidden_; }
  int levels() const { return scale_.levels(); }
  std::string const& fingerprint() const { return fingerprint_; }
  std::string const& tag() const { return tag_; }
  void set_tag(std::string tag) { tag_ = std::move(tag); }

  BlockShape Shape(Block b) const;
  std::span<double> block(Block b);
  std::span<double const> block(Block b) const;
  std::span<double> parameters() { return params_; }
  std::span<double const> parameters() const { return params_; }

  /// He-uniform weights, zero biases.
  void InitializeRandom(std::uint64_t seed);
  /// Rounds every parameter to the nearest float32 (the on-disk precision).
  void SnapToFloat32();

  std::vector<EpochLog> const& training_log() const { return log_; }
  void set_training_log(std::vector<EpochLog> log) { log_ = std::move(log); }

  /// Mean-pooled history representation (length H).
  std::vector<double> EncodeHistory(std::span<EncodedInteraction const> history) const;
  /// Probability over rating levels.
  std::vector<double> Distribution(EncodedExample const& example) const;

  /// Throws FingerprintMismatch when `p` is not the provider this model was
  /// trained with.
  void CheckProvider(EmbeddingProvider const& p) const;

  std::vector<double> PredictDistribution(EmbeddingProvider const& p, ItemTable const& items,
                                          UserHistory const& history, Item const& item) const;
  CriticScore PredictRating(EmbeddingProvider const& p, ItemTable const& items,
                            UserHistory const& history, Item const& item) const;

  /// Argmax with ties going to the lowest level.
  static int ArgMax(std::span<double const> distribution);
  CriticScore ScoreFromDistribution(std::string item_id, std::vector<double> distribution) const;

  friend bool operator==(CriticModel const&, CriticModel const&) = default;

 private:
  RatingScale scale_;
  int dim_;
  int hidden_;
  std::string fingerprint_;
  std::string tag_;
  std::array<std::size_t, kBlockCount + 1> offsets_{};
  std::vector<double> params_;
  std::vector<EpochLog> log_;
};

/// Embeds histories and items for one (provider, item table, scale) triple,
/// memoizing item embeddings. Safe for concurrent use.
class ExampleEncoder {
 public:
  ExampleEncoder(EmbeddingProvider const& provider, ItemTable const& items, RatingScale scale);

  EmbeddingProvider const& provider() const { return provider_; }

  std::vector<EncodedInteraction> EncodeHistory(UserHistory const& history) const;
  SparseVector EncodeItem(Item const& item) const;
  EncodedExample Encode(UserHistory const& history, Item const& item, int label = -1) const;
  std::vector<EncodedExample> EncodeAll(std::span<LabeledExample const> examples) const;

 private:
  EmbeddingProvider const& provider_;
  ItemTable const& items_;
  RatingScale scale_;
  mutable std::mutex mu_;
  mutable std::unordered_map<std::string, SparseVector> cache_;
};

struct LossAndGradient {
  double loss = 0.0;               // mean cross-entropy
  std::vector<double> gradient;    // same layout as CriticModel::parameters()
};

/// Mean cross-entropy over labeled examples and its exact gradient.
LossAndGradient ComputeLossAndGradient(CriticModel const& model,
                                       std::span<EncodedExample const> batch);
double ComputeLoss(CriticModel const& model, std::span<EncodedExample const> batch);

/// Minibatch Adam on cross-entropy. Returns the parameters with the best
/// validation accuracy seen (epoch 0 = initialization included), snapped to
/// float32. Deterministic for a fixed config.
CriticModel TrainCritic(std::span<EncodedExample const> train,
                        std::span<EncodedExample const> val, TrainConfig const& cfg,
                        RatingScale const& scale, int dim, std::string fingerprint,
                        std::string tag = "critic");

CriticModel TrainCritic(std::span<LabeledExample const> train,
                        std::span<LabeledExample const> val, TrainConfig const& cfg,
                        EmbeddingProvider const& provider, ItemTable const& items,
                        RatingScale const& scale);

/// Same training path as TrainCritic on a (larger) user sample; tagged "oracle".
CriticModel BuildOracle(std::span<LabeledExample const> train,
                        std::span<LabeledExample const> val, TrainConfig const& cfg,
                        EmbeddingProvider const& provider, ItemTable const& items,
                        RatingScale const& scale);

CriticEvaluation EvaluateCritic(CriticModel const& model,
                                std::span<EncodedExample const> testset);

/// Builds labeled examples from a dataset: per user, `history_size` sampled
/// interactions form the history and up to `targets_per_user` held-out items
/// become targets. Users with too few ratings are skipped.
std::vector<LabeledExample> MakeExamples(Dataset const& d, std::size_t history_size,
                                         std::size_t targets_per_user, std::uint64_t seed,
                                         std::size_t* skipped_users = nullptr);

/// Versioned binary: magic, format version, JSON header, float32 blocks.
void SaveModel(CriticModel const& model, std::filesystem::path const& path);

struct LoadModelOptions {
  /// When set, the stored fingerprint must equal it unless allow_mismatch.
  std::optional<std::string> expected_fingerprint;
  bool allow_fingerprint_mismatch = false;
};

CriticModel LoadModel(std::filesystem::path const& path, LoadModelOptions const& options = {});

}  // namespace critiquerec

#endif  // CRITIQUEREC_CRITIC_HPP_
