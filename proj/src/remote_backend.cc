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

#include "permdebias/remote_backend.h"

#include <httplib.h>

#include <cmath>
#include <thread>

namespace permdebias {

using nlohmann::json;

namespace {

constexpr char kQuestionLabel[] = "Question: ";

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

const json& first_choice(const json& response) {
  if (!response.contains("choices") || !response["choices"].is_array() ||
      response["choices"].empty()) {
    throw BackendError("completion response has no choices");
  }
  return response["choices"][0];
}

}  // namespace

RenderedPrompt render_prompt(const Query& query,
                             std::span<const Passage> context) {
  RenderedPrompt r;
  r.text = "Passages:\n";
  for (size_t j = 0; j < context.size(); ++j) {
    r.text += "[" + std::to_string(j + 1) + "] " + context[j].text + "\n";
  }
  r.context_end = r.text.size();
  r.text += "\n";
  r.text += kQuestionLabel;
  r.query_begin = r.text.size();
  r.text += query.text;
  return r;
}

RemoteBackend::RemoteBackend(RemoteConfig config) : config_(std::move(config)) {
  if (config_.endpoint.empty()) {
    throw Error("remote backend requires an endpoint URL");
  }
  if (config_.model.empty()) throw Error("remote backend requires a model");
}

json RemoteBackend::post(const json& body) {
  httplib::Client client(config_.endpoint);
  if (!client.is_valid()) {
    throw BackendError("unsupported endpoint '" + config_.endpoint + "'");
  }
  const auto secs =
      std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(
      config_.timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());
  httplib::Headers headers;
  if (!config_.api_key.empty()) {
    headers.emplace("Authorization", "Bearer " + config_.api_key);
  }
  const std::string payload = body.dump();

  std::string last_error;
  for (int attempt = 0; attempt <= std::max(0, config_.retry_budget);
       ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(std::chrono::milliseconds(25 << attempt));
    }
    ++requests_;
    auto res = client.Post(config_.path, headers, payload, "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status == 429 || res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200) {
      throw BackendError("HTTP " + std::to_string(res->status) + ": " +
                         res->body.substr(0, 200));
    }
    try {
      return json::parse(res->body);
    } catch (const json::exception& e) {
      throw BackendError(std::string("malformed completion response: ") +
                         e.what());
    }
  }
  throw BackendError("backend unreachable at " + config_.endpoint + " (" +
                     last_error + ")");
}

ContextScore RemoteBackend::score_context(const Query& query,
                                          std::span<const Passage> context) {
  const RenderedPrompt prompt = render_prompt(query, context);
  const json response = post({{"model", config_.model},
                              {"prompt", prompt.text},
                              {"max_tokens", 0},
                              {"echo", true},
                              {"logprobs", 1},
                              {"temperature", 0}});
  const json& choice = first_choice(response);
  if (!choice.contains("logprobs") || choice["logprobs"].is_null()) {
    throw BackendError("completion response lacks logprobs");
  }
  const json& lp = choice["logprobs"];
  const auto tokens = lp.at("tokens").get<std::vector<std::string>>();
  const json& token_logprobs = lp.at("token_logprobs");
  if (token_logprobs.size() != tokens.size()) {
    throw BackendError("tokens and token_logprobs differ in length");
  }
  std::vector<size_t> offsets;
  if (lp.contains("text_offset") && lp["text_offset"].is_array()) {
    offsets = lp["text_offset"].get<std::vector<size_t>>();
  } else {
    size_t pos = 0;
    for (const auto& t : tokens) {
      offsets.push_back(pos);
      pos += t.size();
    }
  }
  if (offsets.size() != tokens.size()) {
    throw BackendError("text_offset length mismatch");
  }

  ContextScore out;
  for (size_t i = 0; i < tokens.size(); ++i) {
    if (token_logprobs[i].is_null()) continue;  // first echoed token
    const double value = token_logprobs[i].get<double>();
    const size_t begin = offsets[i];
    const size_t end = begin + tokens[i].size();
    if (end > prompt.query_begin) {
      out.query_logprobs.push_back(value);
    } else if (begin < prompt.context_end) {
      out.context_logprobs.push_back(value);
    }
  }
  if (out.query_logprobs.empty()) {
    throw BackendError("no log-probabilities returned for the query span");
  }
  return out;
}

std::string RemoteBackend::generate(const Query& query,
                                    std::span<const Passage> context) {
  if (context.empty()) throw BackendError("generate needs at least one passage");
  const RenderedPrompt prompt = render_prompt(query, context);
  const json response = post({{"model", config_.model},
                              {"prompt", prompt.text + "\nAnswer:"},
                              {"max_tokens", config_.max_answer_tokens},
                              {"temperature", 0}});
  const json& choice = first_choice(response);
  const std::string text = trim(choice.value("text", std::string()));
  if (text.empty()) throw BackendError("empty generation");
  return text;
}

TokenDistribution RemoteBackend::first_token_distribution(
    const Query& query, std::span<const Passage> context) {
  const RenderedPrompt prompt = render_prompt(query, context);
  const json response = post({{"model", config_.model},
                              {"prompt", prompt.text + "\nAnswer:"},
                              {"max_tokens", 1},
                              {"logprobs", config_.top_logprobs},
                              {"temperature", 0}});
  const json& choice = first_choice(response);
  if (!choice.contains("logprobs") || choice["logprobs"].is_null() ||
      !choice["logprobs"].contains("top_logprobs") ||
      choice["logprobs"]["top_logprobs"].empty()) {
    throw BackendError("backend does not report token probabilities");
  }
  const auto top = choice["logprobs"]["top_logprobs"][0]
                       .get<std::map<std::string, double>>();
  return TokenDistribution::from_logprobs(top);
}

}  // namespace permdebias
