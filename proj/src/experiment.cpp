#include "gqpp/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <limits>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "gqpp/log.hpp"
#include "gqpp/rng.hpp"
#include "gqpp/trainer.hpp"

#ifndef GQPP_VERSION
#define GQPP_VERSION "0.0.0"
#endif

namespace gqpp {
namespace {

using json = nlohmann::json;

constexpr int kEvaluationCutoff = 1000;

enum : std::uint64_t { kModelStream = 1, kPointwiseStream = 2, kPredictStream = 3 };

bool is_baseline(const std::string& m) { return parse_baseline(m).has_value(); }

bool is_learned(const std::string& m) {
  return m == "model" || m == "pointwise" || m == "model+nsigma" || m == "pointwise+nsigma";
}

bool wants(const ExperimentConfig& cfg, const std::string& m) {
  return std::find(cfg.methods.begin(), cfg.methods.end(), m) != cfg.methods.end();
}

std::map<std::string, QueryLabel> labels_of(const RetrievalRun& run, const Qrels& qrels, LabelKind kind, int k,
                                            std::vector<std::string>* excluded, bool report) {
  std::map<std::string, QueryLabel> out;
  for (const auto& qid : run.qids()) {
    if (!qrels.has_query(qid) || qrels.relevant_count(qid) == 0) {
      if (report) warn("query '" + qid + "' has no relevant documents in the qrels; excluded");
      if (excluded) excluded->push_back(qid);
      continue;
    }
    const auto ranked = run.ranked_docids(qid);
    double value = 0.0;
    if (kind == LabelKind::PrecisionAtK)
      value = precision_at_k(ranked, qrels, qid, k);
    else
      value = average_precision(ranked, qrels, qid, kEvaluationCutoff).value_or(0.0);
    out[qid] = QueryLabel{qid, value, kind};
  }
  if (out.empty()) throw InputError("no query of the run has relevant judgments");
  return out;
}

QueryScores restrict(const QueryScores& values, const std::vector<std::string>& qids) {
  QueryScores out;
  for (const auto& q : qids)
    if (auto it = values.find(q); it != values.end()) out[q] = it->second;
  return out;
}

/// Correlation of predictions with labels over the labelled queries. A
/// constant vector has no defined correlation and scores 0.
Correlation correlate(const QueryScores& predictions, const QueryScores& labels, const std::string& what) {
  std::vector<double> x, y;
  for (const auto& [qid, p] : predictions) {
    auto it = labels.find(qid);
    if (it == labels.end()) continue;
    x.push_back(p);
    y.push_back(it->second);
  }
  if (x.size() < 2) throw InputError("fewer than two queries to correlate for " + what);
  for (double v : x)
    if (!std::isfinite(v)) throw NumericalError("non-finite prediction from " + what);
  Correlation c;
  try {
    c.pearson = pearson(x, y);
    c.kendall = kendall_tau_b(x, y);
  } catch (const DegenerateError& e) {
    warn(what + ": " + e.what() + "; correlation set to 0");
    c = Correlation{};
  }
  return c;
}

double kendall_or_nan(const QueryScores& predictions, const QueryScores& labels) {
  return tau_against(predictions, labels);
}

template <typename F>
auto stage(const std::string& name, std::size_t split, F&& body) -> decltype(body()) {
  try {
    return body();
  } catch (const StageError&) {
    throw;
  } catch (const NumericalError& e) {
    throw StageError(name, split, e.what(), true);
  } catch (const Error& e) {
    throw StageError(name, split, e.what(), false);
  }
}

std::unique_ptr<PairEncoder> make_encoder(const ExperimentData& data, const ExperimentConfig& cfg,
                                          std::uint64_t seed) {
  if (cfg.encoder == "toy") {
    if (!data.texts) throw InputError("toy encoder needs query and corpus texts");
    ToyEncoderConfig tc;
    tc.vocab_size = cfg.vocab_size;
    tc.token_dim = cfg.token_dim;
    tc.output_dim = cfg.d_model;
    return std::make_unique<ToyPairEncoder>(data.texts, tc, seed);
  }
  if (!data.embeddings) throw InputError("learned methods need pair embeddings");
  return std::make_unique<EmbeddingPairEncoder>(data.embeddings);
}

std::string hex64(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double number_of(const json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

json ttest_json(const TTestResult& t) { return json{{"t", number(t.t)}, {"p", number(t.p)}, {"df", t.df}}; }

TTestResult ttest_of(const json& j) {
  return TTestResult{number_of(j.at("t")), number_of(j.at("p")), j.at("df").get<std::size_t>()};
}

}  // namespace

std::map<std::string, QueryLabel> compute_labels(const RetrievalRun& run, const Qrels& qrels, LabelKind kind, int k,
                                                 std::vector<std::string>* excluded) {
  return labels_of(run, qrels, kind, k, excluded, true);
}

QueryScores label_values(const std::map<std::string, QueryLabel>& labels) {
  QueryScores out;
  for (const auto& [qid, l] : labels) out[qid] = l.value;
  return out;
}

std::string format_labels(const std::map<std::string, QueryLabel>& labels, int k) {
  std::string out;
  char buf[64];
  for (const auto& [qid, l] : labels) {
    std::snprintf(buf, sizeof buf, "%.17g", l.value);
    out += qid + " " + buf + " " + label_kind_name(l.kind, l.kind == LabelKind::PrecisionAtK ? k : kEvaluationCutoff) +
           "\n";
  }
  return out;
}

QueryScores parse_labels(std::string_view text) {
  QueryScores out;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(line);
    std::string qid, value, kind, extra;
    if (!(fields >> qid)) continue;
    if (!(fields >> value)) throw ParseError(line_no, "expected `qid value [kind]`");
    if (fields >> kind) {
      if (fields >> extra) throw ParseError(line_no, "expected `qid value [kind]`");
      try {
        parse_label_kind(kind);
      } catch (const Error&) {
        throw ParseError(line_no, "unknown label kind '" + kind + "'");
      }
    }
    char* end = nullptr;
    const double v = std::strtod(value.c_str(), &end);
    if (end != value.c_str() + value.size() || !std::isfinite(v))
      throw ParseError(line_no, "bad label value '" + value + "'");
    if (!out.emplace(qid, v).second) throw ParseError(line_no, "duplicate label for query '" + qid + "'");
  }
  if (out.empty()) throw InputError("label file holds no labels");
  return out;
}

ExperimentData load_experiment_data(const ExperimentConfig& cfg) {
  if (cfg.run_path.empty()) throw InputError("no run file configured");
  if (cfg.qrels_path.empty()) throw InputError("no qrels file configured");
  ExperimentData data;
  data.run = read_run_file(cfg.run_path);
  data.qrels = read_qrels_file(cfg.qrels_path);
  if (!cfg.collection_scores_path.empty())
    data.collection_scores = parse_collection_scores(read_text_file(cfg.collection_scores_path));

  std::vector<QueryRecord> queries;
  if (!cfg.queries_path.empty()) {
    queries = parse_queries(read_text_file(cfg.queries_path));
    for (const auto& q : queries) data.query_lengths[q.qid] = static_cast<int>(std::max<std::size_t>(1, q.text.size()));
  }
  const bool learned = std::any_of(cfg.methods.begin(), cfg.methods.end(), is_learned);
  if (learned && cfg.encoder == "toy") {
    if (cfg.corpus_path.empty() || cfg.queries_path.empty())
      throw InputError("the toy encoder needs `queries` and `corpus` files");
    const auto corpus = parse_corpus(read_text_file(cfg.corpus_path));
    data.texts = std::make_shared<const PairTexts>(build_pair_texts(queries, corpus, data.run,
                                                                    std::max(cfg.train_depth, cfg.infer_depth),
                                                                    cfg.passage_window, cfg.passage_stride));
  } else if (learned) {
    if (cfg.embeddings_path.empty()) throw InputError("learned methods need an `embeddings` file");
    data.embeddings = std::make_shared<const PairEmbeddingStore>(load_embeddings(cfg.embeddings_path));
  }
  return data;
}

ExperimentLabels make_experiment_labels(const ExperimentData& data, const ExperimentConfig& cfg) {
  int k = 10;
  const LabelKind kind = parse_label_kind(cfg.label_kind, &k);
  ExperimentLabels out;
  out.evaluation = label_values(labels_of(data.run, data.qrels, LabelKind::AveragePrecision, kEvaluationCutoff,
                                          &out.excluded, true));
  out.supervision = label_values(labels_of(data.run, data.qrels, kind, k, nullptr, false));
  return out;
}

SplitResult run_split(const ExperimentData& data, const ExperimentConfig& cfg, const ExperimentLabels& labels,
                      std::size_t index, const Split& split) {
  SplitResult result;
  result.index = index;
  result.split = split;
  const auto& fold1 = split.fold1;
  const auto& fold2 = split.fold2;
  if (fold1.size() < 2 || fold2.size() < 2)
    throw StageError("split", index, "each fold needs at least two queries", false);

  std::vector<std::string> all = fold1;
  all.insert(all.end(), fold2.begin(), fold2.end());
  const QueryScores train_eval = restrict(labels.evaluation, fold1);
  const QueryScores train_supervision = restrict(labels.supervision, fold1);
  const QueryScores test_eval = restrict(labels.evaluation, fold2);

  const auto contexts = stage("baselines", index, [&] {
    return contexts_from_run(data.run.subset(all), data.collection_scores, data.query_lengths);
  });
  auto baseline_on = [&](BaselineMethod m, const BaselineParams& p, const std::vector<std::string>& qids) {
    std::map<std::string, ScoreListContext> sub;
    for (const auto& q : qids) sub.emplace(q, contexts.at(q));
    return evaluate_baseline(m, sub, p);
  };

  // n(sigma_X%) is tuned on fold 1 and doubles as the initial predictor.
  BaselineParams nsigma_params{cfg.baseline_k, cfg.x_grid.front()};
  stage("tune-x", index, [&] {
    double best = -std::numeric_limits<double>::infinity();
    for (double x : cfg.x_grid) {
      const double tau = kendall_or_nan(baseline_on(BaselineMethod::NSigmaX, {cfg.baseline_k, x}, fold1), train_eval);
      if (!std::isnan(tau) && tau > best) {
        best = tau;
        nsigma_params.x_percent = x;
      }
    }
  });
  result.tuned.x_percent = nsigma_params.x_percent;
  const QueryScores nsigma_all = baseline_on(BaselineMethod::NSigmaX, nsigma_params, all);

  stage("baselines", index, [&] {
    for (const auto& m : cfg.methods) {
      if (!is_baseline(m)) continue;
      const auto method = *parse_baseline(m);
      const BaselineParams p = method == BaselineMethod::NSigmaX ? nsigma_params : BaselineParams{cfg.baseline_k, 50.0};
      result.methods[m] = correlate(baseline_on(method, p, fold2), test_eval, m);
    }
  });

  for (const std::string variant : {"model", "pointwise"}) {
    const std::string combined = variant + "+nsigma";
    if (!wants(cfg, variant) && !wants(cfg, combined)) continue;
    const std::uint64_t stream = variant == "model" ? kModelStream : kPointwiseStream;
    const std::uint64_t seed = derive_seed(cfg.seed, index, stream);

    TrainConfig tc = make_train_config(cfg);
    tc.seed = seed;
    if (variant == "pointwise") {
      tc.group_size = 1;
      tc.strategy = GroupingStrategy::RandomOrder;
      tc.inference_strategy.reset();
    }
    const RetrievalRun run1 = data.run.subset(fold1);
    const RetrievalRun run2 = data.run.subset(fold2);
    const QueryScores initial1 = restrict(nsigma_all, fold1);
    const QueryScores initial2 = restrict(nsigma_all, fold2);

    TrainResult trained = stage("train:" + variant, index, [&] {
      auto encoder = make_encoder(data, cfg, seed);
      tc.predictor.d_model = encoder->dim();
      TrainingSet set{&run1, train_supervision, initial1};
      return train(set, *encoder, tc);
    });
    result.tuned.lr[variant] = trained.model.lr;
    result.tuned.aggregation[variant] = aggregation_name(trained.model.aggregation);

    const std::uint64_t predict_seed = derive_seed(seed, kPredictStream);
    const auto& model = trained.model;
    const QueryScores pred2 = stage("predict:" + variant, index, [&] {
      return predict(model, run2, cfg.infer_depth, model.aggregation, initial2, predict_seed);
    });
    if (wants(cfg, variant))
      result.methods[variant] = stage("correlate", index, [&] { return correlate(pred2, test_eval, variant); });

    if (wants(cfg, combined)) {
      const QueryScores pred1 = stage("predict:" + variant, index, [&] {
        return predict(model, run1, cfg.infer_depth, model.aggregation, initial1, predict_seed);
      });
      double lambda = cfg.lambda_grid.front();
      stage("tune-lambda:" + combined, index, [&] {
        double best = -std::numeric_limits<double>::infinity();
        for (double l : cfg.lambda_grid) {
          const double tau = kendall_or_nan(interpolate(pred1, initial1, {l}), train_eval);
          if (!std::isnan(tau) && tau > best) {
            best = tau;
            lambda = l;
          }
        }
      });
      result.tuned.lambda[combined] = lambda;
      result.methods[combined] = stage("correlate", index, [&] {
        return correlate(interpolate(pred2, initial2, {lambda}), test_eval, combined);
      });
    }
  }
  return result;
}

void summarize(ExperimentReport& report) {
  report.summary.clear();
  report.tests.clear();
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> values;
  for (const auto& m : report.methods) {
    auto& [p, k] = values[m];
    for (const auto& s : report.splits) {
      auto it = s.methods.find(m);
      if (it == s.methods.end()) continue;
      p.push_back(it->second.pearson);
      k.push_back(it->second.kendall);
    }
    if (p.empty()) continue;
    double sp = 0.0, sk = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      sp += p[i];
      sk += k[i];
    }
    report.summary[m] = MethodSummary{sp / static_cast<double>(p.size()), sk / static_cast<double>(k.size())};
  }
  auto test = [](const std::vector<double>& a, const std::vector<double>& b) {
    try {
      return paired_t_test(a, b);
    } catch (const NumericalError&) {
      const double nan = std::numeric_limits<double>::quiet_NaN();
      return TTestResult{nan, nan, a.size() - 1};
    }
  };
  for (std::size_t i = 0; i < report.methods.size(); ++i)
    for (std::size_t j = i + 1; j < report.methods.size(); ++j) {
      const auto& a = values[report.methods[i]];
      const auto& b = values[report.methods[j]];
      if (a.first.size() < 2 || a.first.size() != b.first.size()) continue;
      report.tests.push_back(
          {report.methods[i], report.methods[j], test(a.first, b.first), test(a.second, b.second)});
    }
}

ExperimentReport run_experiment(const ExperimentData& data, const ExperimentConfig& cfg,
                                const std::string& partial_path) {
  cfg.validate();
  ExperimentReport report;
  report.version = GQPP_VERSION;
  ExperimentConfig hashed = cfg;
  hashed.output_dir.clear();
  hashed.threads = 0;
  report.config_hash = hex64(fnv1a64(dump_config(hashed)));
  report.seed = cfg.seed;
  report.label_kind = cfg.label_kind;
  report.dataset_profile = cfg.dataset_profile;
  report.methods = cfg.methods;
  report.full_scale_targets = full_scale_targets(cfg.dataset_profile);

  const ExperimentLabels labels = stage("labels", 0, [&] { return make_experiment_labels(data, cfg); });
  report.excluded_queries = labels.excluded;
  std::vector<std::string> qids;
  for (const auto& [qid, v] : labels.evaluation) qids.push_back(qid);
  if (qids.size() < 4) throw StageError("splits", 0, "need at least four judged queries", false);
  const SplitPlan plan = make_splits(qids, cfg.n_splits, cfg.seed);

  const std::size_t n = plan.splits.size();
  std::vector<std::optional<SplitResult>> results(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        results[i] = run_split(data, cfg, labels, i, plan.splits[i]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::size_t threads = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, n);
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  for (std::size_t i = 0; i < n; ++i)
    if (results[i]) report.splits.push_back(std::move(*results[i]));
  summarize(report);
  for (std::size_t i = 0; i < n; ++i) {
    if (!errors[i]) continue;
    if (!partial_path.empty()) {
      std::filesystem::path p(partial_path);
      if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
      write_text_file(partial_path, report_to_json(report));
    }
    try {
      std::rethrow_exception(errors[i]);
    } catch (const StageError&) {
      throw;
    } catch (const NumericalError& e) {
      throw StageError("split", i, e.what(), true);
    } catch (const Error& e) {
      throw StageError("split", i, e.what(), false);
    }
  }
  return report;
}

std::string report_to_json(const ExperimentReport& r) {
  json j;
  j["provenance"] = {{"version", r.version}, {"config_hash", r.config_hash}, {"seed", r.seed}};
  j["label_kind"] = r.label_kind;
  j["dataset_profile"] = r.dataset_profile;
  j["methods"] = r.methods;
  j["summary"] = json::object();
  for (const auto& [m, s] : r.summary)
    j["summary"][m] = {{"mean_pearson", number(s.mean_pearson)}, {"mean_kendall", number(s.mean_kendall)}};
  j["tests"] = json::array();
  for (const auto& t : r.tests)
    j["tests"].push_back({{"a", t.a}, {"b", t.b}, {"pearson", ttest_json(t.pearson)}, {"kendall", ttest_json(t.kendall)}});
  j["splits"] = json::array();
  for (const auto& s : r.splits) {
    json methods = json::object();
    for (const auto& [m, c] : s.methods) methods[m] = {{"pearson", number(c.pearson)}, {"kendall", number(c.kendall)}};
    json tuned = {{"x_percent", s.tuned.x_percent},
                  {"lambda", s.tuned.lambda},
                  {"lr", s.tuned.lr},
                  {"aggregation", s.tuned.aggregation}};
    j["splits"].push_back({{"index", s.index},
                           {"fold1", s.split.fold1},
                           {"fold2", s.split.fold2},
                           {"methods", methods},
                           {"tuned", tuned}});
  }
  j["excluded_queries"] = r.excluded_queries;
  j["full_scale_targets"] = json::array();
  for (const auto& t : r.full_scale_targets)
    j["full_scale_targets"].push_back({{"method", t.method}, {"pearson", t.pearson}, {"kendall", t.kendall}});
  return j.dump(2) + "\n";
}

ExperimentReport report_from_json(const std::string& text) {
  ExperimentReport r;
  try {
    const json j = json::parse(text);
    r.version = j.at("provenance").at("version");
    r.config_hash = j.at("provenance").at("config_hash");
    r.seed = j.at("provenance").at("seed");
    r.label_kind = j.at("label_kind");
    r.dataset_profile = j.at("dataset_profile");
    r.methods = j.at("methods").get<std::vector<std::string>>();
    for (const auto& [m, s] : j.at("summary").items())
      r.summary[m] = MethodSummary{number_of(s.at("mean_pearson")), number_of(s.at("mean_kendall"))};
    for (const auto& t : j.at("tests"))
      r.tests.push_back({t.at("a"), t.at("b"), ttest_of(t.at("pearson")), ttest_of(t.at("kendall"))});
    for (const auto& s : j.at("splits")) {
      SplitResult sr;
      sr.index = s.at("index");
      sr.split.fold1 = s.at("fold1").get<std::vector<std::string>>();
      sr.split.fold2 = s.at("fold2").get<std::vector<std::string>>();
      for (const auto& [m, c] : s.at("methods").items())
        sr.methods[m] = Correlation{number_of(c.at("pearson")), number_of(c.at("kendall"))};
      const auto& tuned = s.at("tuned");
      sr.tuned.x_percent = tuned.at("x_percent");
      sr.tuned.lambda = tuned.at("lambda").get<std::map<std::string, double>>();
      sr.tuned.lr = tuned.at("lr").get<std::map<std::string, double>>();
      sr.tuned.aggregation = tuned.at("aggregation").get<std::map<std::string, std::string>>();
      r.splits.push_back(std::move(sr));
    }
    r.excluded_queries = j.at("excluded_queries").get<std::vector<std::string>>();
    for (const auto& t : j.at("full_scale_targets")) r.full_scale_targets.push_back({t.at("method"), t.at("pearson"), t.at("kendall")});
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed report: ") + e.what());
  }
  return r;
}

std::string report_to_table(const ExperimentReport& r) {
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "splits %zu  seed %llu  label %s  version %s  config %s\n\n", r.splits.size(),
                static_cast<unsigned long long>(r.seed), r.label_kind.c_str(), r.version.c_str(),
                r.config_hash.c_str());
  out += buf;
  std::snprintf(buf, sizeof buf, "%-20s %10s %10s\n", "method", "pearson", "kendall");
  out += buf;
  for (const auto& m : r.methods) {
    auto it = r.summary.find(m);
    if (it == r.summary.end()) continue;
    std::snprintf(buf, sizeof buf, "%-20s %10.4f %10.4f\n", m.c_str(), it->second.mean_pearson,
                  it->second.mean_kendall);
    out += buf;
  }
  if (!r.tests.empty()) {
    out += "\npaired two-tailed t-tests over splits\n";
    std::snprintf(buf, sizeof buf, "%-20s %-20s %9s %9s %9s %9s\n", "a", "b", "t(rho)", "p(rho)", "t(tau)", "p(tau)");
    out += buf;
    for (const auto& t : r.tests) {
      std::snprintf(buf, sizeof buf, "%-20s %-20s %9.3f %9.4f %9.3f %9.4f\n", t.a.c_str(), t.b.c_str(), t.pearson.t,
                    t.pearson.p, t.kendall.t, t.kendall.p);
      out += buf;
    }
  }
  if (!r.excluded_queries.empty()) {
    out += "\nexcluded queries (no relevant documents):";
    for (const auto& q : r.excluded_queries) out += " " + q;
    out += "\n";
  }
  if (!r.full_scale_targets.empty()) {
    out += "\nfull-scale reference correlations (" + r.dataset_profile + ")\n";
    for (const auto& t : r.full_scale_targets) {
      std::snprintf(buf, sizeof buf, "%-20s %10.3f %10.3f\n", t.method.c_str(), t.pearson, t.kendall);
      out += buf;
    }
  }
  return out;
}

void write_report(const ExperimentReport& report, const std::string& dir) {
  std::filesystem::create_directories(dir);
  write_text_file(dir + "/report.json", report_to_json(report));
  write_text_file(dir + "/report.txt", report_to_table(report));
}

std::vector<FullScaleTarget> full_scale_targets(const std::string& profile) {
  // Columns: robust04, gov2, clueweb09b as (pearson, kendall).
  struct Row {
    const char* method;
    double v[6];
  };
  static const Row rows[] = {
      {"wig", {0.546, 0.379, 0.502, 0.346, 0.316, 0.210}},
      {"nqc", {0.516, 0.388, 0.381, 0.323, 0.127, 0.138}},
      {"smv", {0.534, 0.378, 0.352, 0.303, 0.236, 0.183}},
      {"sigma_k", {0.522, 0.389, 0.381, 0.323, 0.234, 0.177}},
      {"nsigma", {0.589, 0.386, 0.556, 0.386, 0.334, 0.247}},
      {"random-base", {0.608, 0.449, 0.665, 0.479, 0.481, 0.353}},
      {"query-base", {0.615, 0.456, 0.676, 0.486, 0.455, 0.327}},
      {"doc-base", {0.563, 0.383, 0.660, 0.476, 0.365, 0.262}},
      {"query+doc-base", {0.598, 0.452, 0.682, 0.496, 0.438, 0.317}},
      {"r+q+d-small", {0.590, 0.419, 0.680, 0.500, 0.437, 0.305}},
      {"r+q+d-base", {0.608, 0.460, 0.676, 0.489, 0.449, 0.324}},
      {"r+q+d-large", {0.612, 0.470, 0.688, 0.508, 0.545, 0.399}},
  };
  int col = -1;
  if (profile == "robust04") col = 0;
  if (profile == "gov2") col = 2;
  if (profile == "clueweb09b") col = 4;
  std::vector<FullScaleTarget> out;
  if (col < 0) return out;
  for (const auto& r : rows) out.push_back({r.method, r.v[col], r.v[col + 1]});
  return out;
}

SweepAxis parse_sweep_axis(const std::string& name) {
  if (name == "group_size") return SweepAxis::GroupSize;
  if (name == "infer_depth") return SweepAxis::InferDepth;
  throw InputError("unknown sweep axis '" + name + "' (group_size, infer_depth)");
}

std::string sweep_axis_name(SweepAxis axis) { return axis == SweepAxis::GroupSize ? "group_size" : "infer_depth"; }

const std::vector<std::size_t>& default_sweep_values(SweepAxis axis) {
  static const std::vector<std::size_t> group = {1, 8, 16, 32, 64};
  static const std::vector<std::size_t> depth = {10, 25, 50, 100, 200};
  return axis == SweepAxis::GroupSize ? group : depth;
}

std::vector<SweepPoint> run_sweep(const ExperimentData& data, const ExperimentConfig& cfg, SweepAxis axis,
                                  std::vector<std::size_t> values) {
  if (values.empty()) values = default_sweep_values(axis);
  std::vector<SweepPoint> out;
  for (std::size_t v : values) {
    if (v == 0) throw InputError("sweep values must be positive");
    ExperimentConfig point = cfg;
    if (axis == SweepAxis::GroupSize) {
      point.group_size = v;
      point.max_positions = std::max(point.max_positions, v);
    } else {
      point.infer_depth = v;
    }
    out.push_back({v, run_experiment(data, point)});
  }
  return out;
}

std::string sweep_table(const std::vector<SweepPoint>& points, SweepAxis axis, const std::string& method) {
  std::string chosen = method;
  if (chosen.empty() && !points.empty()) {
    const auto& methods = points.front().report.methods;
    auto it = std::find_if(methods.begin(), methods.end(), is_learned);
    chosen = it != methods.end() ? *it : (methods.empty() ? std::string() : methods.front());
  }
  std::string out = "# axis=" + sweep_axis_name(axis) + " method=" + chosen + "\n";
  out += sweep_axis_name(axis) + "\tmean_pearson\tmean_kendall\n";
  char buf[96];
  for (const auto& p : points) {
    auto it = p.report.summary.find(chosen);
    if (it == p.report.summary.end()) throw InputError("method '" + chosen + "' not in the sweep reports");
    std::snprintf(buf, sizeof buf, "%zu\t%.6f\t%.6f\n", p.value, it->second.mean_pearson, it->second.mean_kendall);
    out += buf;
  }
  return out;
}

}  // namespace gqpp
