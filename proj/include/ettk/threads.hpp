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

#ifndef ETTK_THREADS_HPP_
#define ETTK_THREADS_HPP_

#include <exception>
#include <thread>
#include <vector>

#include "ettk/common.hpp"

namespace ettk {

inline int resolve_threads(int requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

/// Run fn(shard, begin, end) over contiguous index shards, one per thread.
/// Each shard walks its range in order, so results reduced shard-by-shard in
/// index order are deterministic for a fixed thread count; with one thread
/// this is a plain sequential loop.
template <typename Fn>
void parallel_shards(Index n, int threads, Fn&& fn) {
  const int k = std::max(1, std::min<int>(threads, static_cast<int>(n > 0 ? n : 1)));
  if (k == 1) {
    if (n > 0) fn(0, Index{0}, n);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(k));
  for (int shard = 0; shard < k; ++shard) {
    const Index begin = n * shard / k;
    const Index end = n * (shard + 1) / k;
    pool.emplace_back([&, shard, begin, end] {
      try {
        if (begin < end) fn(shard, begin, end);
      } catch (...) {
        errors[static_cast<std::size_t>(shard)] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (const auto& err : errors) {
    if (err) std::rethrow_exception(err);
  }
}

}  // namespace ettk

#endif  // ETTK_THREADS_HPP_
