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

#include "critiquerec/embedder.hpp"

#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "critiquerec/error.hpp"
#include "critiquerec/random.hpp"
#include "json.hpp"

namespace critiquerec {

namespace {

constexpr char kCacheMagic[8] = {'C', 'R', 'Q', 'E', 'M', 'B', 'C', '1'};

std::string Hex(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << v;
  return os.str();
}

template <typename T>
void WriteLe(std::ostream& out, T value) {
  static_assert(std::endian::native == std::endian::little,
                "on-disk formats assume a little-endian host");
  out.write(reinterpret_cast<char const*>(&value), sizeof value);
}

template <typename T>
bool ReadLe(std::istream& in, T& value) {
  return static_cast<bool>(in.read(reinterpret_cast<char*>(&value), sizeof value));
}

}  // namespace

double Embedding::Norm() const {
  double sum = 0.0;
  for (double v : values) sum += v * v;
  return std::sqrt(sum);
}

std::string ItemText(Item const& item) {
  std::string text = item.title + ".";
  for (auto const& [key, value] : item.attributes) {
    text += " " + key + ": " + value + ".";
  }
  return text;
}

std::vector<std::string> Tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char ch : text) {
    auto const c = static_cast<unsigned char>(ch);
    if (std::isalnum(c) != 0 || c >= 0x80) {
      current.push_back(static_cast<char>(c < 0x80 ? std::tolower(c) : c));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

HashedEmbeddingProvider::HashedEmbeddingProvider(int dim) : dim_(dim) {
  if (dim <= 0) throw ConfigError("embedding dimension must be positive");
}

std::string HashedEmbeddingProvider::Fingerprint() const {
  return "hashed-v1:d=" + std::to_string(dim_) + ":h1=" + Hex(kIndexSeed) +
         ":h2=" + Hex(kSignSeed);
}

std::uint64_t HashedEmbeddingProvider::IndexOf(std::string_view token) const {
  return Mix64(Fnv1a64(token) ^ kIndexSeed) % static_cast<std::uint64_t>(dim_);
}

double HashedEmbeddingProvider::SignOf(std::string_view token) const {
  return (Mix64(Fnv1a64(token) ^ kSignSeed) >> 63) != 0 ? -1.0 : 1.0;
}

Embedding HashedEmbeddingProvider::Embed(std::string_view text) const {
  Embedding e;
  e.values.assign(static_cast<std::size_t>(dim_), 0.0);
  for (auto const& token : Tokenize(text)) {
    e.values[IndexOf(token)] += SignOf(token);
  }
  double const norm = e.Norm();
  if (norm > 0.0) {
    for (double& v : e.values) v /= norm;
  }
  return e;
}

RemoteEmbeddingProvider::RemoteEmbeddingProvider(RemoteEmbeddingConfig config)
    : config_(std::move(config)), endpoint_(HttpEndpoint::Parse(config_.url)) {
  if (config_.dim <= 0) throw ConfigError("embedding dimension must be positive");
  LoadCache();
}

std::string RemoteEmbeddingProvider::Fingerprint() const {
  return "remote:model=" + config_.model + ":d=" + std::to_string(config_.dim);
}

std::size_t RemoteEmbeddingProvider::cache_size() const {
  std::lock_guard lock(mu_);
  return cache_.size();
}

std::size_t RemoteEmbeddingProvider::remote_calls() const {
  std::lock_guard lock(mu_);
  return remote_calls_;
}

void RemoteEmbeddingProvider::LoadCache() {
  if (!config_.cache_path || !std::filesystem::exists(*config_.cache_path)) return;
  std::ifstream in(*config_.cache_path, std::ios::binary);
  char magic[8];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kCacheMagic, sizeof magic) != 0) {
    throw FormatError("embedding cache " + config_.cache_path->string() +
                      " has an unknown format");
  }
  std::uint64_t key = 0;
  std::uint32_t dim = 0;
  while (ReadLe(in, key) && ReadLe(in, dim)) {
    if (static_cast<int>(dim) != config_.dim) {
      throw FormatError("embedding cache holds dimension " + std::to_string(dim) +
                        ", provider expects " + std::to_string(config_.dim));
    }
    Embedding e;
    e.values.resize(dim);
    for (auto& v : e.values) {
      float f = 0;
      if (!ReadLe(in, f)) return;  // torn tail from an interrupted write
      v = f;
    }
    cache_[key] = std::move(e);
  }
}

void RemoteEmbeddingProvider::AppendToCache(std::uint64_t key, Embedding const& e) const {
  if (!config_.cache_path) return;
  bool const fresh = !std::filesystem::exists(*config_.cache_path);
  std::ofstream out(*config_.cache_path, std::ios::binary | std::ios::app);
  if (!out) return;
  if (fresh) out.write(kCacheMagic, sizeof kCacheMagic);
  WriteLe(out, key);
  WriteLe(out, static_cast<std::uint32_t>(e.values.size()));
  for (double v : e.values) WriteLe(out, static_cast<float>(v));
}

Embedding RemoteEmbeddingProvider::Embed(std::string_view text) const {
  std::uint64_t const key = Fnv1a64(text);
  {
    std::lock_guard lock(mu_);
    if (auto it = cache_.find(key); it != cache_.end()) return it->second;
  }

  nlohmann::json body = {{"model", config_.model}, {"input", {std::string(text)}}};
  auto const res = PostJsonWithRetry(endpoint_, body.dump(), config_.token, config_.retry,
                                     config_.timeout);
  if (!res.ok()) throw BackendError("embeddings request failed: " + res.error);

  Embedding e;
  try {
    auto const reply = nlohmann::json::parse(res.body);
    for (auto const& v : reply.at("data").at(0).at("embedding")) {
      e.values.push_back(static_cast<double>(static_cast<float>(v.get<double>())));
    }
  } catch (std::exception const& ex) {
    throw BackendError(std::string("malformed embeddings response: ") + ex.what());
  }
  if (e.dim() != config_.dim) {
    throw BackendError("embeddings endpoint returned dimension " + std::to_string(e.dim()) +
                       ", expected " + std::to_string(config_.dim));
  }
  for (double v : e.values) {
    if (!std::isfinite(v)) throw BackendError("embeddings endpoint returned a non-finite value");
  }

  std::lock_guard lock(mu_);
  ++remote_calls_;
  // Identical keys carry identical values, so last writer wins harmlessly.
  cache_[key] = e;
  AppendToCache(key, e);
  return e;
}

Embedding CachingEmbeddingProvider::Embed(std::string_view text) const {
  {
    std::lock_guard lock(mu_);
    if (auto it = cache_.find(std::string(text)); it != cache_.end()) return it->second;
  }
  Embedding e = inner_->Embed(text);
  std::lock_guard lock(mu_);
  cache_.emplace(std::string(text), e);
  return e;
}

}  // namespace critiquerec
