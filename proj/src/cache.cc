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

#include "permdebias/cache.h"

#include <json.hpp>

namespace permdebias {

using nlohmann::json;

std::string CacheKey::encode() const {
  return json{model_tag, query_id, passage_ids, include_prior,
              length_normalize}
      .dump();
}

CacheKey make_cache_key(const std::string& model_tag, const Query& query,
                        std::span<const Passage> context,
                        const BackendOptions& opts) {
  CacheKey key;
  key.model_tag = model_tag;
  key.query_id = query.id;
  for (const auto& p : context) key.passage_ids.push_back(p.id);
  key.include_prior = opts.include_prior;
  key.length_normalize = opts.length_normalize;
  return key;
}

ScoreCache::ScoreCache(std::filesystem::path file) : file_(std::move(file)) {
  std::ifstream in(*file_);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      CacheKey key;
      key.model_tag = j.at("model_tag").get<std::string>();
      key.query_id = j.at("query_id").get<std::string>();
      key.passage_ids = j.at("passage_ids").get<std::vector<std::string>>();
      key.include_prior = j.at("include_prior").get<bool>();
      key.length_normalize = j.at("length_normalize").get<bool>();
      Entry e;
      e.log_likelihood = j.at("log_likelihood").get<double>();
      if (j.contains("log_prior") && !j["log_prior"].is_null()) {
        e.log_prior = j["log_prior"].get<double>();
      }
      entries_[key.encode()] = e;
    } catch (const json::exception&) {
      ++skipped_lines_;
    }
  }
  in.close();
  out_.open(*file_, std::ios::app);
  if (!out_) {
    throw Error("cannot open score cache file " + file_->string());
  }
}

std::optional<ScoredPermutation> ScoreCache::lookup(const CacheKey& key) {
  std::shared_lock lock(mu_);
  auto it = entries_.find(key.encode());
  if (it == entries_.end()) {
    ++misses_;
    return std::nullopt;
  }
  ++hits_;
  ScoredPermutation s;
  s.log_likelihood = it->second.log_likelihood;
  s.log_prior = it->second.log_prior;
  s.model_tag = key.model_tag;
  s.from_cache = true;
  return s;
}

void ScoreCache::insert(const CacheKey& key, const ScoredPermutation& scored) {
  const std::string encoded = key.encode();
  {
    std::unique_lock lock(mu_);
    auto [it, inserted] = entries_.try_emplace(
        encoded, Entry{scored.log_likelihood, scored.log_prior});
    if (!inserted) return;
  }
  if (!file_) return;
  json j;
  j["model_tag"] = key.model_tag;
  j["query_id"] = key.query_id;
  j["passage_ids"] = key.passage_ids;
  j["include_prior"] = key.include_prior;
  j["length_normalize"] = key.length_normalize;
  j["perm"] = scored.permutation.indices();
  j["log_likelihood"] = scored.log_likelihood;
  j["log_prior"] = scored.log_prior ? json(*scored.log_prior) : json(nullptr);
  std::lock_guard lock(file_mu_);
  out_ << j.dump() << '\n';
  out_.flush();
}

CacheStats ScoreCache::stats() const {
  CacheStats s;
  {
    std::shared_lock lock(mu_);
    s.entries = entries_.size();
  }
  s.hits = hits_.load();
  s.misses = misses_.load();
  return s;
}

bool ScoreCache::clear(const std::filesystem::path& file) {
  return std::filesystem::remove(file);
}

}  // namespace permdebias
