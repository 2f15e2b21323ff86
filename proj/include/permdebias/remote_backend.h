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

// Client for an OpenAI-style text completion endpoint. Scoring echoes the
// prompt with per-token log-probabilities (max_tokens = 0); generation uses
// greedy decoding (temperature 0).
//
// Prompt template (fixed):
//
//   Passages:
//   [1] <passage text>
//   [2] <passage text>
//   ...
//
//   Question: <query text>
//
// Generation appends "\nAnswer:". The scored query span is exactly the query
// text after "Question: "; context tokens are those before "Question:".

#include <atomic>
#include <chrono>
#include <cstdint>
#include <string>

#include <json.hpp>

#include "permdebias/backend.h"

namespace permdebias {

struct RemoteConfig {
  // Scheme, host and optional port, e.g. "http://127.0.0.1:8000".
  std::string endpoint;
  std::string path = "/v1/completions";
  std::string model;
  std::string api_key;
  std::chrono::milliseconds timeout{30000};
  // Extra attempts after a transport failure, 429 or 5xx.
  int retry_budget = 2;
  int max_answer_tokens = 64;
  int top_logprobs = 20;
};

struct RenderedPrompt {
  std::string text;
  // Byte offsets: [0, context_end) is the passage block, [query_begin,
  // text.size()) the query.
  size_t context_end = 0;
  size_t query_begin = 0;
};

RenderedPrompt render_prompt(const Query& query,
                             std::span<const Passage> context);

class RemoteBackend : public Backend {
 public:
  explicit RemoteBackend(RemoteConfig config);

  std::string model_tag() const override { return config_.model; }
  ContextScore score_context(const Query& query,
                             std::span<const Passage> context) override;
  std::string generate(const Query& query,
                       std::span<const Passage> context) override;
  TokenDistribution first_token_distribution(
      const Query& query, std::span<const Passage> context) override;

  // HTTP requests issued, including retries.
  std::uint64_t request_count() const { return requests_.load(); }

 private:
  nlohmann::json post(const nlohmann::json& body);

  RemoteConfig config_;
  std::atomic<std::uint64_t> requests_{0};
};

}  // namespace permdebias
