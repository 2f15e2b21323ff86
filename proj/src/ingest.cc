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

#include "permdebias/ingest.h"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "permdebias/random.h"

namespace permdebias {

using nlohmann::json;

namespace {

template <typename T>
T field(const json& j, const char* name) {
  if (!j.contains(name)) {
    throw ValidationError(std::string("missing field '") + name + "'");
  }
  try {
    return j.at(name).get<T>();
  } catch (const json::exception&) {
    throw ValidationError(std::string("field '") + name + "' has wrong type");
  }
}

std::ofstream open_for_write(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

std::string pad_index(int i, int width) {
  std::string digits = std::to_string(i);
  if (static_cast<int>(digits.size()) < width) {
    digits.insert(0, static_cast<size_t>(width) - digits.size(), '0');
  }
  return digits;
}

std::vector<double> draw_bias(int n, const SynthTemplate& tmpl, Rng& rng) {
  if (!tmpl.decreasing_bias) return rng.simplex_point(n);
  std::vector<double> a(static_cast<size_t>(n), 0.0);
  if (n == 1) {
    a[0] = 1.0;
    return a;
  }
  const double pairs = static_cast<double>(n) * (n - 1) / 2.0;
  double gap = tmpl.min_bias_gap;
  if (gap * pairs >= 1.0) gap = 0.9 / pairs;
  // a_j = gap * (n - 1 - j) + suffix sum of x, with x >= 0 scaled so that
  // a sums to 1; each x_i lands in positions 0..i, adding extra gaps.
  const double rest = 1.0 - gap * pairs;
  const std::vector<double> w = rng.simplex_point(n);
  std::vector<double> x(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) x[i] = rest * w[i] / (i + 1);
  double suffix = 0.0;
  for (int j = n - 1; j >= 0; --j) {
    suffix += x[j];
    a[j] = suffix + gap * (n - 1 - j);
  }
  return a;
}

std::vector<double> draw_utility(int n, const SynthTemplate& tmpl, Rng& rng) {
  const double span_needed = tmpl.min_utility_gap * (n - 1);
  const double free_span =
      std::max(0.0, tmpl.utility_max - tmpl.utility_min - span_needed);
  std::vector<double> base(static_cast<size_t>(n));
  for (double& b : base) b = free_span * rng.uniform01();
  std::sort(base.begin(), base.end());
  std::vector<double> u(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    u[i] = tmpl.utility_min + base[i] + tmpl.min_utility_gap * i;
  }
  rng.shuffle(u);
  return u;
}

}  // namespace

json to_json(const RetrievalList& list) {
  json passages = json::array();
  for (const auto& p : list.passages) {
    json jp = {{"id", p.id}, {"text", p.text}, {"rank", p.retriever_rank}};
    if (p.retriever_score) jp["score"] = *p.retriever_score;
    passages.push_back(std::move(jp));
  }
  json j = {{"query_id", list.query.id}, {"query", list.query.text}};
  if (list.query.gold_answer) j["answer"] = *list.query.gold_answer;
  j["passages"] = std::move(passages);
  j["gold_ids"] = list.query.gold_passage_ids;
  return j;
}

RetrievalList retrieval_list_from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("record is not a JSON object");
  RetrievalList list;
  list.query.id = field<std::string>(j, "query_id");
  list.query.text = field<std::string>(j, "query");
  if (j.contains("answer") && !j["answer"].is_null()) {
    list.query.gold_answer = field<std::string>(j, "answer");
  }
  if (j.contains("gold_ids") && !j["gold_ids"].is_null()) {
    list.query.gold_passage_ids = field<std::vector<std::string>>(j, "gold_ids");
  }
  const json passages = field<json>(j, "passages");
  if (!passages.is_array()) throw ValidationError("'passages' is not an array");
  for (const auto& jp : passages) {
    if (!jp.is_object()) throw ValidationError("passage is not an object");
    Passage p;
    p.id = field<std::string>(jp, "id");
    p.text = field<std::string>(jp, "text");
    p.retriever_rank = field<int>(jp, "rank");
    if (jp.contains("score") && !jp["score"].is_null()) {
      p.retriever_score = field<double>(jp, "score");
    }
    list.passages.push_back(std::move(p));
  }
  return list;
}

LoadResult load_dataset(const std::filesystem::path& path, bool strict) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read dataset " + path.string());
  LoadResult result;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::string problem;
    try {
      RetrievalList list = retrieval_list_from_json(json::parse(line));
      const ValidationReport report = validate_retrieval_list(list);
      if (report.ok()) {
        result.records.push_back(std::move(list));
        continue;
      }
      problem = report.summary();
    } catch (const json::parse_error& e) {
      problem = std::string("malformed JSON: ") + e.what();
    } catch (const ValidationError& e) {
      problem = e.what();
    }
    if (strict) {
      throw ValidationError(path.string() + ":" + std::to_string(line_no) +
                            ": " + problem);
    }
    result.issues.push_back({line_no, problem});
  }
  return result;
}

void write_dataset(const std::filesystem::path& path,
                   std::span<const RetrievalList> records) {
  std::ofstream out = open_for_write(path);
  for (const auto& r : records) out << to_json(r).dump() << '\n';
  if (!out) throw Error("failed writing " + path.string());
}

json GroundTruth::to_json() const {
  return {{"query_id", query_id},
          {"a_star", a_star},
          {"u_star", u_star},
          {"argsort", argsort}};
}

GroundTruth GroundTruth::from_json(const json& j) {
  GroundTruth t;
  t.query_id = field<std::string>(j, "query_id");
  t.a_star = field<std::vector<double>>(j, "a_star");
  t.u_star = field<std::vector<double>>(j, "u_star");
  t.argsort = field<std::vector<int>>(j, "argsort");
  return t;
}

std::vector<GroundTruth> load_truth(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read ground truth " + path.string());
  std::vector<GroundTruth> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(GroundTruth::from_json(json::parse(line)));
    } catch (const std::exception& e) {
      throw ValidationError(path.string() + ":" + std::to_string(line_no) +
                            ": " + e.what());
    }
  }
  return out;
}

SynthCorpus make_synth_corpus(int n_queries, int n_passages,
                              const SynthTemplate& tmpl, std::uint64_t seed) {
  if (n_queries < 1 || n_passages < 1) {
    throw Error("synthetic corpus needs n_queries >= 1 and n_passages >= 1");
  }
  if (!(tmpl.utility_max > tmpl.utility_min) || tmpl.min_utility_gap < 0.0 ||
      tmpl.min_bias_gap < 0.0) {
    throw Error("invalid synthetic template");
  }
  const int width = std::max(4, static_cast<int>(std::to_string(n_queries).size()));
  SynthCorpus corpus;
  for (int q = 0; q < n_queries; ++q) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(q)));
    GroundTruth truth;
    truth.query_id = "q" + pad_index(q + 1, width);
    truth.a_star = draw_bias(n_passages, tmpl, rng);
    truth.u_star = draw_utility(n_passages, tmpl, rng);
    truth.argsort.resize(static_cast<size_t>(n_passages));
    std::iota(truth.argsort.begin(), truth.argsort.end(), 1);
    std::stable_sort(truth.argsort.begin(), truth.argsort.end(),
                     [&](int i, int j) {
                       return truth.u_star[i - 1] > truth.u_star[j - 1];
                     });

    std::vector<double> scores(static_cast<size_t>(n_passages));
    for (double& s : scores) s = rng.uniform01();
    std::sort(scores.rbegin(), scores.rend());

    RetrievalList list;
    list.query.id = truth.query_id;
    list.query.text = "synthetic question " + truth.query_id;
    for (int r = 1; r <= n_passages; ++r) {
      Passage p;
      p.id = truth.query_id + "-p" + std::to_string(r);
      p.text = "synthetic passage " + std::to_string(r) + " for " +
               truth.query_id;
      p.retriever_rank = r;
      p.retriever_score = scores[static_cast<size_t>(r - 1)];
      list.passages.push_back(std::move(p));
    }
    const std::string& gold = list.passages[truth.argsort[0] - 1].id;
    list.query.gold_passage_ids = {gold};
    list.query.gold_answer = gold;
    corpus.dataset.push_back(std::move(list));
    corpus.truth.push_back(std::move(truth));
  }
  return corpus;
}

void write_truth(const std::filesystem::path& path,
                 std::span<const GroundTruth> truth) {
  std::ofstream out = open_for_write(path);
  for (const auto& t : truth) out << t.to_json().dump() << '\n';
  if (!out) throw Error("failed writing " + path.string());
}

SimOracleConfig oracle_from_truth(const GroundTruth& truth, double noise_sigma,
                                  std::uint64_t seed) {
  SimOracleConfig cfg;
  cfg.a_star = truth.a_star;
  cfg.u_star = truth.u_star;
  cfg.noise_sigma = noise_sigma;
  cfg.seed = seed;
  cfg.validate(static_cast<int>(truth.a_star.size()));
  return cfg;
}

}  // namespace permdebias
