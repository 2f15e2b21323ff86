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

#include "permdebias/cli.h"

#include <CLI11.hpp>

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>

#include "permdebias/baselines.h"
#include "permdebias/cache.h"
#include "permdebias/concurrency.h"
#include "permdebias/distill.h"
#include "permdebias/eval.h"
#include "permdebias/ingest.h"
#include "permdebias/pipeline.h"
#include "permdebias/random.h"
#include "permdebias/remote_backend.h"
#include "permdebias/sim_backend.h"

namespace permdebias {

using nlohmann::json;

namespace {

class UsageError : public Error {
 public:
  using Error::Error;
};

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

// Environment variables and the settings they feed.
const std::pair<const char*, const char*> kEnvironment[] = {
    {"PERMDEBIAS_ENDPOINT", "endpoint"},
    {"PERMDEBIAS_API_KEY", "api-key"},
    {"PERMDEBIAS_MODEL", "model"},
    {"PERMDEBIAS_CONCURRENCY", "concurrency"},
    {"PERMDEBIAS_TIMEOUT_MS", "timeout-ms"},
    {"PERMDEBIAS_CACHE", "cache"},
};

// One subcommand's settings. Every option is declared with a typed default
// (null for optional strings); raw flag text is converted to that type.
class Settings {
 public:
  Settings(CLI::App* app) : app_(app) {
    add("config", nullptr, "JSON file with settings keyed by long flag name");
  }

  void add(const std::string& name, json default_value,
           const std::string& help) {
    defaults_[name] = default_value;
    if (default_value.is_boolean()) {
      app_->add_flag("--" + name, flags_[name], help)->type_name("");
    } else {
      auto* opt = app_->add_option("--" + name, raw_[name], help);
      if (default_value.is_number_integer()) {
        opt->type_name("INT");
      } else if (default_value.is_number()) {
        opt->type_name("REAL");
      }
      if (!default_value.is_null()) {
        opt->default_str(default_value.is_string()
                             ? default_value.get<std::string>()
                             : default_value.dump());
      }
    }
  }

  // Merge defaults, environment, config file and explicit flags.
  void resolve() {
    values_ = defaults_;
    for (const auto& [var, key] : kEnvironment) {
      if (!defaults_.contains(key)) continue;
      if (const char* v = std::getenv(var); v != nullptr && *v != '\0') {
        values_[key] = convert(key, v, std::string("$") + var);
      }
    }
    const auto explicit_config = given("config");
    if (explicit_config) {
      std::ifstream in(*explicit_config);
      if (!in) throw UsageError("cannot read config file " + *explicit_config);
      json cfg;
      try {
        cfg = json::parse(in);
      } catch (const json::exception& e) {
        throw UsageError("malformed config file: " + std::string(e.what()));
      }
      if (!cfg.is_object()) throw UsageError("config file must hold an object");
      for (const auto& [key, value] : cfg.items()) {
        if (!defaults_.contains(key) || key == "config") {
          throw UsageError("unknown config key '" + key + "'");
        }
        values_[key] = value.is_string() && !defaults_[key].is_string() &&
                               !defaults_[key].is_null()
                           ? convert(key, value.get<std::string>(), "config")
                           : check_type(key, value);
      }
    }
    for (const auto& [key, text] : raw_) {
      if (key == "config") continue;
      if (app_->count("--" + key) > 0) values_[key] = convert(key, text, "--" + key);
    }
    for (const auto& [key, count] : flags_) {
      if (count > 0) values_[key] = true;
    }
  }

  std::optional<std::string> given(const std::string& key) const {
    auto it = raw_.find(key);
    if (it == raw_.end() || app_->count("--" + key) == 0) return std::nullopt;
    return it->second;
  }

  bool has(const std::string& key) const {
    return values_.contains(key) && !values_[key].is_null();
  }
  std::string str(const std::string& key) const {
    if (!has(key)) throw UsageError("missing required --" + key);
    return values_[key].get<std::string>();
  }
  std::optional<std::string> opt_str(const std::string& key) const {
    if (!has(key)) return std::nullopt;
    return values_[key].get<std::string>();
  }
  long long integer(const std::string& key) const {
    return values_.at(key).get<long long>();
  }
  double real(const std::string& key) const {
    return values_.at(key).get<double>();
  }
  bool flag(const std::string& key) const { return values_.at(key).get<bool>(); }
  std::uint64_t seed() const {
    return static_cast<std::uint64_t>(values_.at("seed").get<long long>());
  }

 private:
  json convert(const std::string& key, const std::string& text,
               const std::string& source) const {
    const json& d = defaults_.at(key);
    try {
      size_t used = 0;
      if (d.is_boolean()) {
        if (text == "1" || text == "true") return true;
        if (text == "0" || text == "false") return false;
      } else if (d.is_number_integer()) {
        const long long v = std::stoll(text, &used);
        if (used == text.size()) return v;
      } else if (d.is_number()) {
        const double v = std::stod(text, &used);
        if (used == text.size()) return v;
      } else {
        return text;
      }
    } catch (const std::exception&) {
    }
    throw UsageError("invalid value '" + text + "' for " + key + " (from " +
                     source + ")");
  }

  json check_type(const std::string& key, const json& value) const {
    const json& d = defaults_.at(key);
    const bool ok = value.is_null() ||
                    (d.is_boolean() && value.is_boolean()) ||
                    (d.is_number_integer() && value.is_number_integer()) ||
                    (d.is_number_float() && value.is_number()) ||
                    ((d.is_string() || d.is_null()) && value.is_string());
    if (!ok) throw UsageError("config key '" + key + "' has the wrong type");
    return d.is_number_float() && value.is_number() ? json(value.get<double>())
                                                    : value;
  }

  CLI::App* app_;
  json defaults_ = json::object();
  json values_;
  std::map<std::string, std::string> raw_;
  std::map<std::string, int> flags_;
};

void add_io_settings(Settings& s) {
  s.add("in", nullptr, "dataset JSONL");
  s.add("out", nullptr, "output path (stdout when omitted)");
  s.add("seed", 0, "top-level seed");
  s.add("jobs", 1, "queries processed concurrently");
  s.add("keep-going", false, "exit 0 despite per-query failures");
  s.add("strict", false, "fail on the first invalid dataset line");
}

void add_backend_settings(Settings& s) {
  s.add("backend", "sim", "sim | remote");
  s.add("truth", nullptr, "ground-truth sidecar for the sim backend");
  s.add("sim-noise", 0.0, "sim score noise standard deviation");
  s.add("endpoint", nullptr, "remote base URL, e.g. http://host:port");
  s.add("model", nullptr, "remote model name");
  s.add("api-key", nullptr, "remote bearer token");
  s.add("concurrency", 4, "in-flight backend calls per query");
  s.add("timeout-ms", 30000, "remote request timeout");
  s.add("retries", 2, "remote retry budget");
  s.add("include-prior", false, "add the context log-prior to scores");
  s.add("no-length-normalize", false, "sum instead of average log-probs");
  s.add("cache", nullptr, "score cache JSONL");
}

BackendOptions backend_options(const Settings& s) {
  BackendOptions o;
  o.include_prior = s.flag("include-prior");
  o.length_normalize = !s.flag("no-length-normalize");
  o.max_concurrency = static_cast<int>(s.integer("concurrency"));
  o.timeout = std::chrono::milliseconds(s.integer("timeout-ms"));
  o.retry_budget = static_cast<int>(s.integer("retries"));
  if (o.max_concurrency < 1) throw UsageError("--concurrency must be >= 1");
  if (s.integer("jobs") < 1) throw UsageError("--jobs must be >= 1");
  return o;
}

std::unique_ptr<Backend> make_backend(const Settings& s) {
  const std::string kind = s.str("backend");
  if (kind == "sim") {
    const auto truth_path = s.opt_str("truth");
    if (!truth_path) throw UsageError("--backend sim requires --truth");
    std::vector<GroundTruth> truth;
    try {
      truth = load_truth(*truth_path);
    } catch (const Error& e) {
      throw UsageError(e.what());
    }
    auto sim = std::make_unique<SimulatedBackend>();
    const double noise = s.real("sim-noise");
    for (const auto& t : truth) {
      sim->set_query_config(t.query_id,
                            oracle_from_truth(t, noise, s.seed()));
    }
    return sim;
  }
  if (kind == "remote") {
    RemoteConfig cfg;
    cfg.endpoint = s.opt_str("endpoint").value_or("");
    cfg.model = s.opt_str("model").value_or("");
    cfg.api_key = s.opt_str("api-key").value_or("");
    cfg.timeout = std::chrono::milliseconds(s.integer("timeout-ms"));
    cfg.retry_budget = static_cast<int>(s.integer("retries"));
    if (cfg.endpoint.empty()) {
      throw UsageError("--backend remote requires --endpoint");
    }
    if (cfg.model.empty()) throw UsageError("--backend remote requires --model");
    return std::make_unique<RemoteBackend>(std::move(cfg));
  }
  throw UsageError("unknown backend '" + kind + "' (expected sim or remote)");
}

std::unique_ptr<ScoreCache> make_cache(const Settings& s) {
  if (auto path = s.opt_str("cache")) {
    return std::make_unique<ScoreCache>(std::filesystem::path(*path));
  }
  return nullptr;
}

std::vector<RetrievalList> load_input(const Settings& s, std::ostream& err) {
  const auto path = s.opt_str("in");
  if (!path) throw UsageError("missing required --in");
  if (!std::filesystem::exists(*path)) {
    throw UsageError("dataset not found: " + *path);
  }
  LoadResult loaded = load_dataset(*path, s.flag("strict"));
  for (const auto& issue : loaded.issues) {
    err << *path << ":" << issue.line << ": skipped: " << issue.message << "\n";
  }
  return std::move(loaded.records);
}

// Writes to --out (replacing it) or to `out`.
void emit(const Settings& s, const std::string& text, std::ostream& out) {
  if (auto path = s.opt_str("out")) {
    std::ofstream f(*path, std::ios::trunc | std::ios::binary);
    if (!f) throw Error("cannot write " + *path);
    f << text;
    if (!f) throw Error("failed writing " + *path);
  } else {
    out << text;
  }
}

std::uint64_t query_seed(std::uint64_t seed, const std::string& query_id) {
  return derive_seed(seed, query_id);
}

struct QueryOutcome {
  std::vector<std::string> lines;
  std::optional<double> residual;
  std::vector<std::string> notes;
};

struct RunSummary {
  int ok = 0;
  int failed = 0;
};

// Runs `work` for every query with --jobs workers and writes the produced
// lines in dataset order.
RunSummary run_queries(const Settings& s, const std::vector<RetrievalList>& data,
                       const std::function<QueryOutcome(const RetrievalList&)>& work,
                       std::ostream& out, std::ostream& err,
                       std::vector<QueryOutcome>* outcomes_out = nullptr) {
  std::vector<QueryOutcome> outcomes(data.size());
  const auto errors = parallel_for(
      data.size(), static_cast<int>(s.integer("jobs")),
      [&](size_t i) { outcomes[i] = work(data[i]); });
  RunSummary summary;
  std::string text;
  for (size_t i = 0; i < data.size(); ++i) {
    if (errors[i]) {
      ++summary.failed;
      try {
        std::rethrow_exception(errors[i]);
      } catch (const std::exception& e) {
        err << "query " << data[i].query.id << ": error: " << e.what() << "\n";
      }
      continue;
    }
    ++summary.ok;
    for (const auto& note : outcomes[i].notes) {
      err << "query " << data[i].query.id << ": " << note << "\n";
    }
    for (const auto& line : outcomes[i].lines) text += line + "\n";
  }
  emit(s, text, out);
  if (outcomes_out) *outcomes_out = std::move(outcomes);
  return summary;
}

int finish(const Settings& s, const RunSummary& summary) {
  if (summary.failed > 0 && !s.flag("keep-going")) return kExitFailure;
  return kExitOk;
}

void print_summary(std::ostream& err, const RunSummary& summary,
                   const ScoreCache* cache,
                   const std::vector<QueryOutcome>& outcomes) {
  err << "queries: " << summary.ok << " ok, " << summary.failed << " failed";
  if (cache != nullptr) {
    const CacheStats st = cache->stats();
    err << "; cache hit rate: " << std::fixed << std::setprecision(3)
        << st.hit_rate() << " (" << st.hits << "/" << st.hits + st.misses
        << ")";
  }
  double total = 0.0;
  int count = 0;
  for (const auto& o : outcomes) {
    if (o.residual) {
      total += *o.residual;
      ++count;
    }
  }
  if (count > 0) {
    err << "; mean residual: " << std::scientific << std::setprecision(3)
        << total / count;
  }
  err << std::defaultfloat << "\n";
}

RerankStrategy rerank_strategy(const Settings& s) {
  RerankStrategy st;
  const std::string design = s.str("design");
  if (design == "random") {
    st.design = DesignKind::kRandom3N;
  } else if (design == "cyclic") {
    st.design = DesignKind::kCyclic;
  } else if (design == "pruned") {
    st.design = DesignKind::kPrunedCyclic;
    if (s.integer("L") == 0) throw UsageError("--design pruned requires --L");
  } else if (design == "variable") {
    st.design = DesignKind::kVariablePruned;
  } else {
    throw UsageError("unknown design '" + design +
                     "' (expected random, cyclic, pruned, variable)");
  }
  st.prune_length = static_cast<int>(s.integer("L"));
  st.tau = s.real("tau");
  if (s.integer("m") > 0) st.random_count = static_cast<int>(s.integer("m"));
  st.solver.restarts = static_cast<int>(s.integer("restarts"));
  st.solver.max_iterations = static_cast<int>(s.integer("max-iter"));
  st.solver.ridge = s.real("ridge");
  st.backend_opts = backend_options(s);
  return st;
}

int cmd_rerank(const Settings& s, std::ostream& out, std::ostream& err) {
  const RerankStrategy base = rerank_strategy(s);
  const auto data = load_input(s, err);
  auto backend = make_backend(s);
  auto cache = make_cache(s);
  const bool generate = s.flag("generate");
  std::vector<QueryOutcome> outcomes;
  const RunSummary summary = run_queries(
      s, data,
      [&](const RetrievalList& list) {
        RerankStrategy st = base;
        const std::uint64_t qs = query_seed(s.seed(), list.query.id);
        st.seed = qs;
        st.solver.seed = derive_seed(qs, std::uint64_t{1});
        const RerankResult r = pid_rerank(*backend, list, st, cache.get());
        RankingRecord rec = make_record(list.query.id, r);
        if (generate) rec.answer = generate_answer(*backend, list, r.ranking);
        QueryOutcome o;
        o.lines.push_back(rec.to_json().dump());
        o.residual = r.model.residual_sse;
        return o;
      },
      out, err, &outcomes);
  print_summary(err, summary, cache.get(), outcomes);
  return finish(s, summary);
}

int cmd_baseline(const Settings& s, std::ostream& out, std::ostream& err) {
  static const std::set<std::string> kMethods = {
      "bayes",    "bayes_plus",       "qg",        "lingua",
      "listwise", "self_consistency", "retriever", "random"};
  const std::string method = s.str("method");
  if (!kMethods.contains(method)) {
    throw UsageError("unknown baseline '" + method + "'");
  }
  const BackendOptions opts = backend_options(s);
  const int samples = static_cast<int>(s.integer("samples"));
  const int k = static_cast<int>(s.integer("k"));
  if (samples < 1) throw UsageError("--samples must be >= 1");
  if (k < 1) throw UsageError("--k must be >= 1");
  const auto data = load_input(s, err);
  const bool needs_backend = method != "retriever" && method != "random";
  const bool generate = s.flag("generate");
  std::unique_ptr<Backend> backend;
  if (needs_backend || generate) backend = make_backend(s);
  auto cache = make_cache(s);

  std::vector<QueryOutcome> outcomes;
  const RunSummary summary = run_queries(
      s, data,
      [&](const RetrievalList& list) {
        const ValidationReport report = validate_retrieval_list(list);
        if (!report.ok()) throw ValidationError(report.summary());
        const std::uint64_t qs = query_seed(s.seed(), list.query.id);
        QueryOutcome o;
        std::vector<Ranking> rankings;
        if (method == "self_consistency") {
          RankingRecord rec;
          rec.query_id = list.query.id;
          rec.ranking.provenance = "self_consistency";
          rec.answer =
              self_consistency(*backend, list, k, qs, opts.max_concurrency);
          o.lines.push_back(rec.to_json().dump());
          return o;
        }
        if (method == "retriever") {
          rankings.push_back(retriever_ranking(list, "retriever"));
        } else if (method == "random") {
          for (int i = 0; i < samples; ++i) {
            Ranking r = retriever_ranking(list, "random");
            Rng rng(derive_seed(qs, static_cast<std::uint64_t>(i)));
            rng.shuffle(r.ids);
            rankings.push_back(std::move(r));
          }
        } else if (method == "listwise") {
          ListwiseResult lr = bayes_saliency_listwise(*backend, list, false, opts);
          o.notes.push_back(std::to_string(lr.backend_calls) + " scoring calls");
          rankings.push_back(std::move(lr.ranking));
        } else if (method == "bayes_plus") {
          ListwiseResult lr = bayes_saliency_listwise(*backend, list, true, opts);
          o.notes.push_back(std::to_string(lr.backend_calls) + " scoring calls");
          rankings.push_back(std::move(lr.ranking));
        } else if (method == "bayes") {
          rankings.push_back(pointwise_rerank(*backend, list,
                                              PointwiseMethod::kBayesSaliency,
                                              true, opts, cache.get()));
        } else if (method == "qg") {
          rankings.push_back(pointwise_rerank(
              *backend, list, PointwiseMethod::kQG, false, opts, cache.get()));
        } else {
          rankings.push_back(pointwise_rerank(*backend, list,
                                              PointwiseMethod::kLingua, false,
                                              opts, cache.get()));
        }
        for (auto& r : rankings) {
          RankingRecord rec;
          rec.query_id = list.query.id;
          if (generate) rec.answer = generate_answer(*backend, list, r);
          rec.ranking = std::move(r);
          o.lines.push_back(rec.to_json().dump());
        }
        return o;
      },
      out, err, &outcomes);
  print_summary(err, summary, cache.get(), outcomes);
  return finish(s, summary);
}

std::vector<Prediction> load_predictions(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read predictions " + path);
  std::vector<Prediction> preds;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const RankingRecord rec = RankingRecord::from_json(json::parse(line));
      Prediction p;
      p.query_id = rec.query_id;
      p.answer = rec.answer;
      if (!rec.ranking.ids.empty()) p.ids = rec.ranking.ids;
      preds.push_back(std::move(p));
    } catch (const std::exception& e) {
      throw Error(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return preds;
}

int cmd_eval(const Settings& s, std::ostream& out, std::ostream& err) {
  const std::string pred_path = s.str("pred");
  const auto data = load_input(s, err);
  std::vector<std::string> metrics;
  {
    std::stringstream ss(s.str("metrics"));
    std::string m;
    while (std::getline(ss, m, ',')) {
      if (!m.empty()) metrics.push_back(m);
    }
  }
  if (metrics.empty()) throw UsageError("--metrics is empty");
  for (const auto& m : metrics) {
    if (m != "em" && m != "rouge_l" && m != "mrr") {
      throw UsageError("unknown metric '" + m + "'");
    }
  }
  const auto preds = load_predictions(pred_path);
  const EvalReport report = evaluate(preds, data, metrics);
  if (!report.unmatched_predictions.empty()) {
    err << "predictions for " << report.unmatched_predictions.size()
        << " unknown query id(s), first: "
        << report.unmatched_predictions.front() << "\n";
  }
  if (!report.missing_predictions.empty()) {
    err << report.missing_predictions.size()
        << " dataset query id(s) without predictions, first: "
        << report.missing_predictions.front() << "\n";
  }
  emit(s, report.to_json().dump(2) + "\n", out);
  for (const auto& [metric, value] : report.aggregates) {
    err << metric << ": " << value << " (" << report.counts.at(metric)
        << " queries)\n";
  }
  return kExitOk;
}

int cmd_bias_report(const Settings& s, std::ostream& out, std::ostream& err) {
  const std::string path = s.str("in");
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read rankings " + path);
  std::vector<DisentangledModel> models;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    RankingRecord rec;
    try {
      rec = RankingRecord::from_json(json::parse(line));
    } catch (const std::exception& e) {
      throw Error(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
    if (!rec.bias) continue;
    DisentangledModel m;
    m.bias.a = *rec.bias;
    m.degenerate = rec.ranking.degenerate;
    models.push_back(std::move(m));
  }
  const BiasReport report = bias_report(models);
  emit(s, report.to_json().dump(2) + "\n", out);
  if (auto csv = s.opt_str("csv")) {
    std::ofstream f(*csv, std::ios::trunc);
    if (!f) throw Error("cannot write " + *csv);
    report.write_csv(f);
  }
  err << "bias report over " << report.query_count << " fit(s), "
      << report.excluded_degenerate << " degenerate excluded\n";
  return kExitOk;
}

int cmd_distill_build(const Settings& s, std::ostream&, std::ostream& err) {
  const std::string sink = s.str("out");
  const BackendOptions opts = backend_options(s);
  const int k = static_cast<int>(s.integer("k"));
  if (k < 2) throw UsageError("--k must be >= 2");
  const auto data = load_input(s, err);
  auto backend = make_backend(s);
  auto cache = make_cache(s);
  const DistillBuildStats stats =
      build_distill_dataset(data, *backend, k, s.seed(), sink, opts,
                            cache.get(), static_cast<int>(s.integer("jobs")));
  for (const auto& f : stats.failures) {
    err << "query " << f.query_id << ": error: " << f.message << "\n";
  }
  err << stats.written << " new records, " << stats.skipped_existing
      << " already present, " << stats.failures.size() << " failed\n";
  if (!stats.failures.empty() && !s.flag("keep-going")) return kExitFailure;
  return kExitOk;
}

int cmd_synth(const Settings& s, std::ostream&, std::ostream& err) {
  const std::string out_path = s.str("out");
  const std::string truth_path = s.str("truth");
  SynthTemplate tmpl;
  tmpl.decreasing_bias = !s.flag("random-bias");
  tmpl.min_bias_gap = s.real("bias-gap");
  tmpl.min_utility_gap = s.real("utility-gap");
  tmpl.utility_min = s.real("utility-min");
  tmpl.utility_max = s.real("utility-max");
  const int n_queries = static_cast<int>(s.integer("queries"));
  const int n_passages = static_cast<int>(s.integer("passages"));
  if (n_queries < 1 || n_passages < 1) {
    throw UsageError("--queries and --passages must be >= 1");
  }
  const SynthCorpus corpus =
      make_synth_corpus(n_queries, n_passages, tmpl, s.seed());
  write_dataset(out_path, corpus.dataset);
  write_truth(truth_path, corpus.truth);
  err << "wrote " << corpus.dataset.size() << " queries to " << out_path
      << " and ground truth to " << truth_path << "\n";
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"Position-debiased passage reranking for RAG", "permdebias"};
  app.require_subcommand(1);

  auto* rerank = app.add_subcommand("rerank", "debiased reranking per query");
  Settings rerank_s(rerank);
  add_io_settings(rerank_s);
  add_backend_settings(rerank_s);
  rerank_s.add("design", "random", "random | cyclic | pruned | variable");
  rerank_s.add("L", 0, "prefix length for --design pruned");
  rerank_s.add("tau", 0.9, "retriever-mass threshold for --design variable");
  rerank_s.add("m", 0, "random design size (default 3N)");
  rerank_s.add("restarts", 8, "solver restarts");
  rerank_s.add("max-iter", 500, "solver iterations per restart");
  rerank_s.add("ridge", 1e-8, "utility ridge penalty");
  rerank_s.add("generate", false, "generate an answer from the reranked list");

  auto* baseline = app.add_subcommand("baseline", "baseline rankings");
  Settings baseline_s(baseline);
  add_io_settings(baseline_s);
  add_backend_settings(baseline_s);
  baseline_s.add("method", nullptr,
                 "bayes | bayes_plus | qg | lingua | listwise | "
                 "self_consistency | retriever | random");
  baseline_s.add("samples", 1, "rankings per query for method random");
  baseline_s.add("k", 30, "orderings voted over by self_consistency");
  baseline_s.add("generate", false, "generate an answer from each ranking");

  auto* eval = app.add_subcommand("eval", "score predictions against gold");
  Settings eval_s(eval);
  add_io_settings(eval_s);
  eval_s.add("pred", nullptr, "prediction JSONL (ranking format)");
  eval_s.add("metrics", "em,rouge_l,mrr", "comma-separated metric names");

  auto* bias = app.add_subcommand("bias-report", "aggregate fitted bias");
  Settings bias_s(bias);
  bias_s.add("in", nullptr, "ranking JSONL written by rerank");
  bias_s.add("out", nullptr, "report JSON (stdout when omitted)");
  bias_s.add("csv", nullptr, "also write position,mean,std CSV here");

  auto* distill = app.add_subcommand("distill-build", "teacher score dataset");
  Settings distill_s(distill);
  add_io_settings(distill_s);
  add_backend_settings(distill_s);
  distill_s.add("k", 30, "orderings per query");

  auto* synth = app.add_subcommand("synth", "synthetic corpus with truth");
  Settings synth_s(synth);
  synth_s.add("queries", 100, "number of queries");
  synth_s.add("passages", 5, "passages per query");
  synth_s.add("seed", 0, "generator seed");
  synth_s.add("out", nullptr, "dataset JSONL");
  synth_s.add("truth", nullptr, "ground-truth sidecar JSONL");
  synth_s.add("bias-gap", 0.05, "minimum gap between consecutive a*");
  synth_s.add("utility-gap", 0.5, "minimum gap between sorted u*");
  synth_s.add("utility-min", 0.0, "lower end of u*");
  synth_s.add("utility-max", 5.0, "upper end of u*");
  synth_s.add("random-bias", false, "draw a* uniformly from the simplex");

  auto* cache = app.add_subcommand("cache", "score cache maintenance");
  cache->require_subcommand(1);
  std::string cache_path;
  auto* cache_stats = cache->add_subcommand("stats", "entry and line counts");
  cache_stats->add_option("--cache", cache_path, "cache JSONL")->required();
  auto* cache_clear = cache->add_subcommand("clear", "delete the cache file");
  cache_clear->add_option("--cache", cache_path, "cache JSONL")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    if (!app.get_subcommands().empty()) {
      err << app.get_subcommands().front()->help();
    } else {
      err << app.help();
    }
    return kExitUsage;
  }

  const std::pair<CLI::App*, Settings*> table[] = {
      {rerank, &rerank_s},   {baseline, &baseline_s}, {eval, &eval_s},
      {bias, &bias_s},       {distill, &distill_s},   {synth, &synth_s}};
  try {
    for (const auto& [sub, settings] : table) {
      if (!sub->parsed()) continue;
      settings->resolve();
      if (sub == rerank) return cmd_rerank(*settings, out, err);
      if (sub == baseline) return cmd_baseline(*settings, out, err);
      if (sub == eval) return cmd_eval(*settings, out, err);
      if (sub == bias) return cmd_bias_report(*settings, out, err);
      if (sub == distill) return cmd_distill_build(*settings, out, err);
      return cmd_synth(*settings, out, err);
    }
    if (cache_stats->parsed()) {
      if (!std::filesystem::exists(cache_path)) {
        err << "no cache at " << cache_path << "\n";
        return kExitFailure;
      }
      ScoreCache c{std::filesystem::path(cache_path)};
      const CacheStats st = c.stats();
      out << json{{"path", cache_path},
                  {"entries", st.entries},
                  {"skipped_lines", c.skipped_lines()},
                  {"bytes", std::filesystem::file_size(cache_path)}}
                 .dump()
          << "\n";
      return kExitOk;
    }
    if (cache_clear->parsed()) {
      const bool removed = ScoreCache::clear(cache_path);
      err << (removed ? "removed " : "nothing to remove at ") << cache_path
          << "\n";
      return kExitOk;
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    for (const auto& [sub, settings] : table) {
      if (sub->parsed()) err << sub->help();
    }
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace permdebias
