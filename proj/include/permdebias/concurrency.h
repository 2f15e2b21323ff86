// Copyright 2026 The permdebias Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace permdebias {

// Runs fn(i) for i in [0, count) on at most `max_workers` threads. Returns
// one exception_ptr per index (null on success); never throws from fn.
inline std::vector<std::exception_ptr> parallel_for(
    size_t count, int max_workers, const std::function<void(size_t)>& fn) {
  std::vector<std::exception_ptr> errors(count);
  if (count == 0) return errors;
  const size_t workers =
      std::min(count, static_cast<size_t>(std::max(1, max_workers)));
  std::atomic<size_t> next{0};
  auto work = [&] {
    for (size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    work();
    return errors;
  }
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  return errors;
}

}  // namespace permdebias
