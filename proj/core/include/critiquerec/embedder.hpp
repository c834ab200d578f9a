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

#ifndef CRITIQUEREC_EMBEDDER_HPP_
#define CRITIQUEREC_EMBEDDER_HPP_

#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "critiquerec/catalog.hpp"
#include "critiquerec/http.hpp"

namespace critiquerec {

struct Embedding {
  std::vector<double> values;

  int dim() const { return static_cast<int>(values.size()); }
  double Norm() const;
  friend bool operator==(Embedding const&, Embedding const&) = default;
};

/// Text -> fixed-dimension vector. Implementations must be deterministic and
/// safe for concurrent Embed calls.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;

  virtual int dim() const = 0;
  /// Identifies the embedding function; models trained with one provider
  /// refuse inputs from another.
  virtual std::string Fingerprint() const = 0;
  virtual Embedding Embed(std::string_view text) const = 0;
};

/// "title. field1: value1. field2: value2." in stored field order.
std::string ItemText(Item const& item);

inline Embedding EmbedItem(EmbeddingProvider const& p, Item const& item) {
  return p.Embed(ItemText(item));
}

/// Lowercase word tokens: maximal runs of ASCII alphanumerics or UTF-8 bytes.
std::vector<std::string> Tokenize(std::string_view text);

/// Signed feature hashing of word tokens, L2-normalized when non-zero.
class HashedEmbeddingProvider final : public EmbeddingProvider {
 public:
  static constexpr std::uint64_t kIndexSeed = 0x9ae16a3b2f90404fULL;
  static constexpr std::uint64_t kSignSeed = 0xc3a5c85c97cb3127ULL;

  explicit HashedEmbeddingProvider(int dim = 256);

  int dim() const override { return dim_; }
  std::string Fingerprint() const override;
  Embedding Embed(std::string_view text) const override;

  /// Bucket and sign for a single token.
  std::uint64_t IndexOf(std::string_view token) const;
  double SignOf(std::string_view token) const;

 private:
  int dim_;
};

struct RemoteEmbeddingConfig {
  std::string url;  // full endpoint, e.g. http://host/v1/embeddings
  std::string model;
  std::string token;
  int dim = 1536;
  std::optional<std::filesystem::path> cache_path;
  RetryPolicy retry;
  std::chrono::seconds timeout{60};
};

/// Calls an embeddings HTTP endpoint ({"model", "input": [text]} ->
/// {"data": [{"embedding": [...]}]}). Responses are rounded to float32 and
/// cached by text so repeated calls are bit-identical; the optional on-disk
/// cache persists them across runs.
class RemoteEmbeddingProvider final : public EmbeddingProvider {
 public:
  explicit RemoteEmbeddingProvider(RemoteEmbeddingConfig config);

  int dim() const override { return config_.dim; }
  std::string Fingerprint() const override;
  Embedding Embed(std::string_view text) const override;

  std::size_t cache_size() const;
  std::size_t remote_calls() const;

 private:
  void LoadCache();
  void AppendToCache(std::uint64_t key, Embedding const& e) const;

  RemoteEmbeddingConfig config_;
  HttpEndpoint endpoint_;
  mutable std::mutex mu_;
  mutable std::unordered_map<std::uint64_t, Embedding> cache_;
  mutable std::size_t remote_calls_ = 0;
};

/// Memoizes Embed results of another provider in memory.
class CachingEmbeddingProvider final : public EmbeddingProvider {
 public:
  explicit CachingEmbeddingProvider(std::shared_ptr<EmbeddingProvider const> inner)
      : inner_(std::move(inner)) {}

  int dim() const override { return inner_->dim(); }
  std::string Fingerprint() const override { return inner_->Fingerprint(); }
  Embedding Embed(std::string_view text) const override;

 private:
  std::shared_ptr<EmbeddingProvider const> inner_;
  mutable std::mutex mu_;
  mutable std::unordered_map<std::string, Embedding> cache_;
};

}  // namespace critiquerec

#endif  // CRITIQUEREC_EMBEDDER_HPP_
