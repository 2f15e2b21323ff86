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

// Permutation score cache keyed by (model tag, query id, passage-id
// sequence, include_prior, length_normalize). Optionally persisted as an
// append-only JSONL file, one scored permutation per line.

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "permdebias/backend.h"

namespace permdebias {

struct CacheKey {
  std::string model_tag;
  std::string query_id;
  std::vector<std::string> passage_ids;
  bool include_prior = false;
  bool length_normalize = true;

  std::string encode() const;
};

CacheKey make_cache_key(const std::string& model_tag, const Query& query,
                        std::span<const Passage> context,
                        const BackendOptions& opts);

struct CacheStats {
  std::uint64_t entries = 0;
  std::uint64_t hits = 0;
  std::uint64_t misses = 0;

  double hit_rate() const {
    const auto total = hits + misses;
    return total == 0 ? 0.0 : static_cast<double>(hits) / total;
  }
};

class ScoreCache {
 public:
  // In-memory only.
  ScoreCache() = default;
  // Loads existing entries from `file` (if present) and appends new ones.
  // Unparseable lines are skipped and counted.
  explicit ScoreCache(std::filesystem::path file);

  ScoreCache(const ScoreCache&) = delete;
  ScoreCache& operator=(const ScoreCache&) = delete;

  std::optional<ScoredPermutation> lookup(const CacheKey& key);
  void insert(const CacheKey& key, const ScoredPermutation& scored);

  CacheStats stats() const;
  std::uint64_t skipped_lines() const { return skipped_lines_; }
  const std::optional<std::filesystem::path>& file() const { return file_; }

  // Removes a cache file; returns false if it did not exist.
  static bool clear(const std::filesystem::path& file);

 private:
  struct Entry {
    double log_likelihood = 0.0;
    std::optional<double> log_prior;
  };

  mutable std::shared_mutex mu_;
  std::unordered_map<std::string, Entry> entries_;
  std::optional<std::filesystem::path> file_;
  std::mutex file_mu_;
  std::ofstream out_;
  std::atomic<std::uint64_t> hits_{0};
  std::atomic<std::uint64_t> misses_{0};
  std::uint64_t skipped_lines_ = 0;
};

}  // namespace permdebias
