/* Copyright 2026 The ettk authors. All rights reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef ETTK_RNG_HPP_
#define ETTK_RNG_HPP_

#include <cmath>
#include <cstdint>
#include <vector>

#include "ettk/common.hpp"

namespace ettk {

// splitmix64 finalizer; also used to derive independent streams.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Deterministic, platform-independent RNG (splitmix64 core). Every random
/// draw in the toolkit goes through this class so that runs are reproducible
/// byte-for-byte from a seed, independent of the standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(mix64(seed ^ 0x2545f4914f6cdd1dULL)) {}

  /// Independent stream for (seed, stream, index), e.g. per-utterance
  /// augmentation draws that stay stable under batch-parallel execution.
  static Rng derive(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
    return Rng(mix64(seed) ^ mix64(stream * 0x9e3779b97f4a7c15ULL + 1) ^ mix64(index + 0x632be59bd9b4e019ULL));
  }

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t x = state_;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). n must be positive.
  Index uniform_index(Index n) {
    if (n <= 0) throw ContractError("Rng::uniform_index: n must be positive");
    // Rejection-free multiply-shift; bias is negligible for n << 2^64 and,
    // more to the point, identical on every platform.
    return static_cast<Index>((static_cast<unsigned __int128>(next_u64()) * static_cast<unsigned __int128>(n)) >> 64);
  }

  bool bernoulli(double p) { return uniform() < p; }

  /// Standard normal via Box-Muller (second value cached).
  double normal() {
    if (has_cache_) {
      has_cache_ = false;
      return cache_;
    }
    double u1 = uniform();
    double u2 = uniform();
    // Avoid log(0).
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    cache_ = r * std::sin(a);
    has_cache_ = true;
    return r * std::cos(a);
  }

 private:
  std::uint64_t state_;
  double cache_ = 0.0;
  bool has_cache_ = false;
};

/// Fisher-Yates with the toolkit RNG; deterministic across platforms, unlike
/// std::shuffle.
template <typename T>
void shuffle(std::vector<T>& items, Rng& rng) {
  for (Index i = static_cast<Index>(items.size()) - 1; i > 0; --i) {
    const Index j = rng.uniform_index(i + 1);
    std::swap(items[static_cast<std::size_t>(i)], items[static_cast<std::size_t>(j)]);
  }
}

}  // namespace ettk

#endif  // ETTK_RNG_HPP_
