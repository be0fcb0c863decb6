#include "gqpp/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>

#include "CLI11.hpp"

#include "gqpp/baselines.hpp"
#include "gqpp/config.hpp"
#include "gqpp/error.hpp"
#include "gqpp/experiment.hpp"
#include "gqpp/synthetic.hpp"
#include "gqpp/trainer.hpp"

#ifndef GQPP_VERSION
#define GQPP_VERSION "0.0.0"
#endif

namespace gqpp {
namespace {

namespace fs = std::filesystem;

std::string flag_name(const std::string& key) {
  std::string out = key;
  std::replace(out.begin(), out.end(), '_', '-');
  return "--" + out;
}

/// Flags mirroring every ExperimentConfig key, plus --config.
struct ConfigFlags {
  std::string config_path;
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> options;

  void attach(CLI::App* app) {
    app->add_option("--config", config_path, "key = value configuration file");
    for (const auto& key : config_keys()) options[key] = app->add_option(flag_name(key), values[key]);
  }

  ExperimentConfig resolve() const {
    ExperimentConfig cfg = config_path.empty() ? ExperimentConfig{} : load_config(config_path);
    for (const auto& key : config_keys())
      if (options.at(key)->count() > 0) apply_setting(cfg, key, values.at(key));
    cfg.validate();
    return cfg;
  }

  bool given(const std::string& key) const { return options.at(key)->count() > 0; }
};

std::string join_tokens(const Tokens& t) {
  std::string out;
  for (std::size_t i = 0; i < t.size(); ++i) out += (i ? " " : "") + t[i];
  return out;
}

void write_or_print(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
    return;
  }
  fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  write_text_file(path, text);
}

std::shared_ptr<const PairTexts> load_texts(const ExperimentConfig& cfg, const RetrievalRun& run, std::size_t depth) {
  if (cfg.queries_path.empty() || cfg.corpus_path.empty())
    throw InputError("the toy encoder needs --queries and --corpus");
  const auto queries = parse_queries(read_text_file(cfg.queries_path));
  const auto corpus = parse_corpus(read_text_file(cfg.corpus_path));
  return std::make_shared<const PairTexts>(
      build_pair_texts(queries, corpus, run, depth, cfg.passage_window, cfg.passage_stride));
}

// --- subcommands -----------------------------------------------------------

int cmd_ingest(const ExperimentConfig& cfg, std::ostream& out) {
  if (cfg.run_path.empty()) throw InputError("ingest needs --run");
  fs::create_directories(cfg.output_dir);
  const std::string dir = cfg.output_dir + "/";
  const RetrievalRun run = read_run_file(cfg.run_path);
  write_text_file(dir + "run.txt", serialize_run(run));
  out << "run: " << run.num_queries() << " queries, " << run.num_entries() << " entries\n";
  if (!cfg.qrels_path.empty()) {
    const Qrels qrels = read_qrels_file(cfg.qrels_path);
    write_text_file(dir + "qrels.txt", serialize_qrels(qrels));
    std::size_t judged = 0;
    for (const auto& q : run.qids()) judged += qrels.relevant_count(q) > 0;
    out << "qrels: " << qrels.size() << " judgments, " << judged << " run queries with relevant documents\n";
  }
  if (!cfg.queries_path.empty()) {
    std::string text;
    for (const auto& q : parse_queries(read_text_file(cfg.queries_path))) text += q.qid + "\t" + join_tokens(q.text) + "\n";
    write_text_file(dir + "queries.tsv", text);
  }
  if (!cfg.corpus_path.empty()) {
    std::string text;
    std::size_t n = 0;
    for (const auto& d : parse_corpus(read_text_file(cfg.corpus_path))) {
      text += d.docid + "\t" + join_tokens(d.text) + "\n";
      ++n;
    }
    write_text_file(dir + "corpus.tsv", text);
    out << "corpus: " << n << " documents\n";
  }
  return kExitOk;
}

int cmd_embed(const ExperimentConfig& cfg, const std::string& input, std::size_t depth, std::ostream& out) {
  const std::string target = cfg.embeddings_path;
  if (target.empty()) throw InputError("embed needs --embeddings <output path>");
  PairEmbeddingStore store;
  if (!input.empty()) {
    store = load_embeddings(input);
  } else {
    if (cfg.run_path.empty()) throw InputError("embed needs --run (or --input to convert a file)");
    const RetrievalRun run = read_run_file(cfg.run_path);
    const auto texts = load_texts(cfg, run, depth);
    ToyEncoderConfig tc;
    tc.vocab_size = cfg.vocab_size;
    tc.token_dim = cfg.token_dim;
    tc.output_dim = cfg.d_model;
    store = embed_pairs(ToyEncoder(tc, cfg.seed), *texts, run, depth);
  }
  fs::path p(target);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  save_embeddings(store, target);
  out << "wrote " << store.size() << " pair embeddings (dim " << store.dim() << ") to " << target << "\n";
  return kExitOk;
}

int cmd_baseline(const std::string& method, std::size_t k, double x, const std::string& run_path,
                 const std::string& cs_path, const std::string& queries_path, const std::string& out_path,
                 std::ostream& out) {
  const auto m = parse_baseline(method);
  if (!m) throw InputError("unknown baseline '" + method + "' (sigma_k, nqc, wig, smv, nsigma)");
  const RetrievalRun run = read_run_file(run_path);
  QueryScores cs;
  if (!cs_path.empty()) cs = parse_collection_scores(read_text_file(cs_path));
  std::map<std::string, int> lengths;
  if (!queries_path.empty())
    for (const auto& q : parse_queries(read_text_file(queries_path)))
      lengths[q.qid] = static_cast<int>(std::max<std::size_t>(1, q.text.size()));
  const auto scores = evaluate_baseline(*m, contexts_from_run(run, cs, lengths), BaselineParams{k, x});
  write_or_print(out_path, format_predictions(scores, baseline_name(*m)), out);
  return kExitOk;
}

int cmd_labels(const ExperimentConfig& cfg, const std::string& out_path, std::ostream& out) {
  if (cfg.run_path.empty() || cfg.qrels_path.empty()) throw InputError("labels needs --run and --qrels");
  int k = 10;
  const LabelKind kind = parse_label_kind(cfg.label_kind, &k);
  const auto labels = compute_labels(read_run_file(cfg.run_path), read_qrels_file(cfg.qrels_path), kind, k);
  write_or_print(out_path, format_labels(labels, k), out);
  return kExitOk;
}

int cmd_train(const ExperimentConfig& cfg, const std::string& labels_path, std::ostream& out) {
  if (cfg.run_path.empty()) throw InputError("train needs --run");
  const RetrievalRun full = read_run_file(cfg.run_path);
  QueryScores labels;
  if (!labels_path.empty()) {
    labels = parse_labels(read_text_file(labels_path));
  } else {
    if (cfg.qrels_path.empty()) throw InputError("train needs --qrels or --labels");
    int k = 10;
    const LabelKind kind = parse_label_kind(cfg.label_kind, &k);
    labels = label_values(compute_labels(full, read_qrels_file(cfg.qrels_path), kind, k));
  }
  std::vector<std::string> qids;
  for (const auto& q : full.qids())
    if (labels.count(q)) qids.push_back(q);
  const RetrievalRun run = full.subset(qids);

  TrainConfig tc = make_train_config(cfg);
  std::unique_ptr<PairEncoder> encoder;
  if (cfg.encoder == "toy") {
    ToyEncoderConfig ec;
    ec.vocab_size = cfg.vocab_size;
    ec.token_dim = cfg.token_dim;
    ec.output_dim = cfg.d_model;
    encoder = std::make_unique<ToyPairEncoder>(load_texts(cfg, run, std::max(cfg.train_depth, cfg.infer_depth)), ec,
                                               cfg.seed);
  } else {
    if (cfg.embeddings_path.empty()) throw InputError("train needs --embeddings (or --encoder toy)");
    encoder = std::make_unique<EmbeddingPairEncoder>(
        std::make_shared<const PairEmbeddingStore>(load_embeddings(cfg.embeddings_path)));
  }
  tc.predictor.d_model = encoder->dim();
  const TrainResult result = train(TrainingSet{&run, labels, {}}, *encoder, tc);

  fs::create_directories(cfg.output_dir);
  const std::string model_path = cfg.output_dir + "/model.ckpt";
  save_model(result.model, model_path);
  write_text_file(cfg.output_dir + "/train_log.txt", format_train_log(result.log));
  std::string selection = "lr\taggregation\tkendall\n";
  char buf[128];
  for (const auto& s : result.selection) {
    std::snprintf(buf, sizeof buf, "%g\t%s\t%.6f\n", s.lr, aggregation_name(s.aggregation).c_str(), s.tau);
    selection += buf;
  }
  write_text_file(cfg.output_dir + "/selection.tsv", selection);
  out << "trained on " << run.num_queries() << " queries, " << result.log.size() << " steps; lr " << result.model.lr
      << ", aggregation " << aggregation_name(result.model.aggregation) << "\nmodel: " << model_path << "\n";
  return kExitOk;
}

int cmd_predict(const ExperimentConfig& cfg, const std::string& model_path, const std::string& aggregation,
                const std::string& out_path, std::ostream& out) {
  if (model_path.empty()) throw InputError("predict needs --model");
  if (cfg.run_path.empty()) throw InputError("predict needs --run");
  const RetrievalRun run = read_run_file(cfg.run_path);
  std::shared_ptr<const PairEmbeddingStore> store;
  std::shared_ptr<const PairTexts> texts;
  if (!cfg.embeddings_path.empty())
    store = std::make_shared<const PairEmbeddingStore>(load_embeddings(cfg.embeddings_path));
  if (!cfg.queries_path.empty() && !cfg.corpus_path.empty()) texts = load_texts(cfg, run, cfg.infer_depth);
  const GroupwiseModel model = load_model(model_path, store, texts);
  const AggregationMethod agg = aggregation.empty() ? model.aggregation : parse_aggregation(aggregation);
  const auto scores = predict(model, run, cfg.infer_depth, agg, {}, cfg.seed);
  write_or_print(out_path, format_predictions(scores, ""), out);
  return kExitOk;
}

int cmd_evaluate(const std::vector<std::string>& preds, const std::string& labels_path, const std::string& splits_path,
                 std::ostream& out) {
  if (preds.empty() || labels_path.empty()) throw InputError("evaluate needs --pred and --labels");
  const QueryScores labels = parse_labels(read_text_file(labels_path));
  std::vector<std::pair<std::string, QueryScores>> methods;
  for (const auto& p : preds) {
    std::string name = fs::path(p).stem().string();
    methods.emplace_back(name, parse_predictions(read_text_file(p)));
  }
  char buf[256];
  if (splits_path.empty()) {
    std::snprintf(buf, sizeof buf, "%-20s %6s %10s %10s\n", "method", "n", "pearson", "kendall");
    out << buf;
    for (const auto& [name, scores] : methods) {
      std::vector<double> x, y;
      for (const auto& [qid, s] : scores)
        if (auto it = labels.find(qid); it != labels.end()) {
          x.push_back(s);
          y.push_back(it->second);
        }
      if (x.size() < 2) throw InputError(name + ": fewer than two labelled queries");
      std::snprintf(buf, sizeof buf, "%-20s %6zu %10.6f %10.6f\n", name.c_str(), x.size(), pearson(x, y),
                    kendall_tau_b(x, y));
      out << buf;
    }
    return kExitOk;
  }
  const SplitPlan plan = parse_split_plan(read_text_file(splits_path));
  ExperimentReport report;
  report.version = GQPP_VERSION;
  report.seed = plan.seed;
  report.label_kind = "file";
  for (const auto& [name, s] : methods) report.methods.push_back(name);
  for (std::size_t i = 0; i < plan.splits.size(); ++i) {
    SplitResult sr;
    sr.index = i;
    sr.split = plan.splits[i];
    for (const auto& [name, scores] : methods) {
      std::vector<double> x, y;
      for (const auto& qid : sr.split.fold2) {
        auto p = scores.find(qid);
        auto l = labels.find(qid);
        if (p == scores.end() || l == labels.end()) continue;
        x.push_back(p->second);
        y.push_back(l->second);
      }
      if (x.size() < 2) throw InputError(name + ": fewer than two labelled test queries in split " + std::to_string(i));
      sr.methods[name] = Correlation{pearson(x, y), kendall_tau_b(x, y)};
    }
    report.splits.push_back(std::move(sr));
  }
  summarize(report);
  out << report_to_table(report);
  return kExitOk;
}

int cmd_experiment(const ExperimentConfig& cfg, std::ostream& out) {
  const ExperimentData data = load_experiment_data(cfg);
  const ExperimentReport report = run_experiment(data, cfg, cfg.output_dir + "/partial_report.json");
  write_report(report, cfg.output_dir);
  write_text_file(cfg.output_dir + "/config.txt", dump_config(cfg));
  out << report_to_table(report);
  return kExitOk;
}

int cmd_sweep(const ExperimentConfig& cfg, const std::string& axis_name, const std::vector<std::size_t>& values,
              std::ostream& out) {
  const SweepAxis axis = parse_sweep_axis(axis_name);
  const ExperimentData data = load_experiment_data(cfg);
  const auto points = run_sweep(data, cfg, axis, values);
  for (const auto& p : points) write_report(p.report, cfg.output_dir + "/" + axis_name + "-" + std::to_string(p.value));
  const std::string table = sweep_table(points, axis);
  fs::create_directories(cfg.output_dir);
  write_text_file(cfg.output_dir + "/sweep_" + axis_name + ".tsv", table);
  out << table;
  return kExitOk;
}

int cmd_synth(const SyntheticOptions& o, const std::string& dir, std::ostream& out) {
  const auto data = make_synthetic(o);
  write_synthetic(data, dir);
  std::string conf = "run = " + dir + "/run.txt\nqrels = " + dir + "/qrels.txt\nembeddings = " + dir +
                     "/embeddings.qppe\n";
  if (o.with_text) conf += "queries = " + dir + "/queries.tsv\ncorpus = " + dir + "/corpus.tsv\n";
  conf += "d_model = " + std::to_string(o.dim) + "\n";
  write_text_file(dir + "/experiment.conf", conf);
  out << "wrote " << o.num_queries << " queries x " << o.docs_per_query << " documents to " << dir << "\n";
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Groupwise query performance prediction workbench", "gqpp"};
  app.set_version_flag("--version", std::string(GQPP_VERSION));
  app.require_subcommand(1);

  ConfigFlags ingest_f, embed_f, labels_f, train_f, predict_f, exp_f, sweep_f, config_f;

  auto* ingest = app.add_subcommand("ingest", "Validate and normalise runs, qrels, queries and corpus");
  ingest_f.attach(ingest);

  auto* embed = app.add_subcommand("embed", "Write pair embeddings with the toy encoder, or convert a file");
  embed_f.attach(embed);
  std::string embed_input;
  std::size_t embed_depth = 100;
  embed->add_option("--input", embed_input, "existing embedding file to validate and convert");
  embed->add_option("--depth", embed_depth, "pairs per query to encode")->check(CLI::PositiveNumber);

  auto* baseline = app.add_subcommand("baseline", "Score-based predictors");
  std::string b_method, b_run, b_cs, b_queries, b_out;
  std::size_t b_k = 100;
  double b_x = 50.0;
  baseline->add_option("--method", b_method, "sigma_k, nqc, wig, smv or nsigma")->required();
  baseline->add_option("--run", b_run, "run file")->required();
  baseline->add_option("--k", b_k, "cut-off depth")->check(CLI::PositiveNumber);
  baseline->add_option("--x", b_x, "threshold percentage for nsigma")->check(CLI::Range(0.0, 100.0));
  baseline->add_option("--collection-scores", b_cs, "`qid score` file of s(C)");
  baseline->add_option("--queries", b_queries, "queries file (query lengths for wig)");
  baseline->add_option("--out", b_out, "output file (default stdout)");

  auto* labels = app.add_subcommand("labels", "Per-query labels from a run and qrels");
  labels_f.attach(labels);
  std::string labels_out;
  labels->add_option("--output", labels_out, "output file (default stdout)");

  auto* train_cmd = app.add_subcommand("train", "Train a groupwise predictor");
  train_f.attach(train_cmd);
  std::string train_labels;
  train_cmd->add_option("--labels", train_labels, "`qid value [kind]` label file (default: from qrels)");

  auto* predict_cmd = app.add_subcommand("predict", "Predict query performance with a trained model");
  predict_f.attach(predict_cmd);
  std::string p_model, p_agg, p_out;
  predict_cmd->add_option("--model", p_model, "model checkpoint")->required();
  predict_cmd->add_option("--aggregation", p_agg, "max, mean or first (default: the model's)");
  predict_cmd->add_option("--output", p_out, "output file (default stdout)");

  auto* evaluate = app.add_subcommand("evaluate", "Correlate prediction files with labels");
  std::vector<std::string> e_preds;
  std::string e_labels, e_splits;
  evaluate->add_option("--pred", e_preds, "prediction file(s)")->required();
  evaluate->add_option("--labels", e_labels, "label file")->required();
  evaluate->add_option("--splits", e_splits, "split plan; reports test-fold means and t-tests");

  auto* experiment = app.add_subcommand("experiment", "Run the repeated 2-fold protocol");
  exp_f.attach(experiment);

  auto* sweep = app.add_subcommand("sweep", "Repeat the experiment over one axis");
  sweep_f.attach(sweep);
  std::string s_axis = "group_size";
  std::vector<std::size_t> s_values;
  sweep->add_option("--axis", s_axis, "group_size or infer_depth");
  sweep->add_option("--values", s_values, "grid values (default: the standard grid)")->delimiter(',');

  auto* synth = app.add_subcommand("synth", "Write a synthetic collection");
  SyntheticOptions so;
  std::string s_dir = "synthetic", s_signal = "planted";
  synth->add_option("--out", s_dir, "output directory");
  synth->add_option("--num-queries", so.num_queries)->check(CLI::PositiveNumber);
  synth->add_option("--docs", so.docs_per_query)->check(CLI::PositiveNumber);
  synth->add_option("--dim", so.dim)->check(CLI::PositiveNumber);
  synth->add_option("--seed", so.seed);
  synth->add_option("--noise", so.noise);
  synth->add_option("--signal", s_signal)->check(CLI::IsMember({"planted", "dispersion"}));
  synth->add_flag("--text", so.with_text, "also write query and document texts");

  auto* config = app.add_subcommand("config", "Print the effective configuration");
  config_f.attach(config);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << GQPP_VERSION << "\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    const auto subs = app.get_subcommands();
    err << (subs.empty() ? app.help() : subs.front()->help());
    return kExitUsage;
  }

  try {
    if (ingest->parsed()) return cmd_ingest(ingest_f.resolve(), out);
    if (embed->parsed()) return cmd_embed(embed_f.resolve(), embed_input, embed_depth, out);
    if (baseline->parsed()) return cmd_baseline(b_method, b_k, b_x, b_run, b_cs, b_queries, b_out, out);
    if (labels->parsed()) return cmd_labels(labels_f.resolve(), labels_out, out);
    if (train_cmd->parsed()) return cmd_train(train_f.resolve(), train_labels, out);
    if (predict_cmd->parsed()) return cmd_predict(predict_f.resolve(), p_model, p_agg, p_out, out);
    if (evaluate->parsed()) return cmd_evaluate(e_preds, e_labels, e_splits, out);
    if (experiment->parsed()) return cmd_experiment(exp_f.resolve(), out);
    if (sweep->parsed()) return cmd_sweep(sweep_f.resolve(), s_axis, s_values, out);
    if (synth->parsed()) {
      so.signal = s_signal == "dispersion" ? SyntheticSignal::Dispersion : SyntheticSignal::Planted;
      return cmd_synth(so, s_dir, out);
    }
    if (config->parsed()) {
      out << dump_config(config_f.resolve());
      return kExitOk;
    }
  } catch (const StageError& e) {
    err << "error: " << e.what() << "\n";
    return e.numerical() ? kExitNumerical : kExitData;
  } catch (const NumericalError& e) {
    err << "error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
  err << app.help();
  return kExitUsage;
}

int run_cli(const std::vector<std::string>& args) { return run_cli(args, std::cout, std::cerr); }

}  // namespace gqpp
