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

#ifndef CRITIQUEREC_RANDOM_HPP_
#define CRITIQUEREC_RANDOM_HPP_

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <utility>
#include <vector>

namespace critiquerec {

/// Stable 64-bit FNV-1a. Used wherever a hash must survive process restarts
/// and compiler changes (std::hash gives no such guarantee).
std::uint64_t Fnv1a64(std::string_view bytes,
                      std::uint64_t basis = 0xcbf29ce484222325ULL);

/// splitmix64 finalizer.
std::uint64_t Mix64(std::uint64_t x);

/// Combines a seed with a string key into a new seed.
std::uint64_t DeriveSeed(std::uint64_t seed, std::string_view key);

/// Platform-independent PRNG. The standard distributions are
/// implementation-defined, so all sampling goes through this class to keep
/// experiments byte-reproducible across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t NextU64();
  /// Uniform in [0, n). n must be > 0.
  std::uint64_t UniformIndex(std::uint64_t n);
  /// Uniform in [0, 1) with 53 random bits.
  double Uniform01();
  /// Uniform in [lo, hi).
  double Uniform(double lo, double hi);
  /// Standard normal (Box-Muller, no cached second value).
  double Normal();

  template <typename T>
  void Shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(UniformIndex(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t state_[4];
};

}  // namespace critiquerec

#endif  // CRITIQUEREC_RANDOM_HPP_
