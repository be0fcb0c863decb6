#include "doctest.h"
#include "support.hpp"

#include <algorithm>
#include <cmath>

#include "gqpp/error.hpp"
#include "gqpp/experiment.hpp"
#include "gqpp/log.hpp"
#include "gqpp/synthetic.hpp"

using namespace gqpp;
using test_support::run_line;

namespace {

ExperimentData synthetic_data(std::size_t queries, std::uint64_t seed) {
  SyntheticOptions opt;
  opt.num_queries = queries;
  opt.docs_per_query = 12;
  opt.dim = 8;
  opt.seed = seed;
  auto s = make_synthetic(opt);
  ExperimentData d;
  d.run = s.run;
  d.qrels = s.qrels;
  d.embeddings = std::make_shared<const PairEmbeddingStore>(s.embeddings);
  return d;
}

ExperimentConfig small_config() {
  auto cfg = parse_config(
      "methods = nqc, nsigma, model, model+nsigma\n"
      "n_splits = 3\nseed = 7\nthreads = 1\nlabel = AP@1000\n"
      "group_size = 4\ntrain_depth = 12\ninfer_depth = 6\nepochs = 2\n"
      "lr_grid = 0.001\naggregations = mean\n"
      "d_model = 8\nn_heads = 2\nn_layers = 1\nmax_positions = 8\nbaseline_k = 12\n");
  return cfg;
}

}  // namespace

TEST_CASE("labels of a perfect and a mixed ranking") {
  auto run = parse_run(run_line("q1", "a", 1, 3) + run_line("q1", "b", 2, 2) + run_line("q2", "a", 1, 3) +
                       run_line("q2", "b", 2, 2) + run_line("q2", "c", 3, 1) + run_line("q3", "z", 1, 1));
  auto qrels = parse_qrels("q1 0 a 1\nq1 0 b 1\nq2 0 a 1\nq2 0 c 1\nq3 0 z 0\n");
  WarningCapture capture;
  std::vector<std::string> excluded;
  auto ap = compute_labels(run, qrels, LabelKind::AveragePrecision, 1000, &excluded);
  CHECK(ap.at("q1").value == doctest::Approx(1.0));
  CHECK(ap.at("q2").value == doctest::Approx((1.0 + 2.0 / 3.0) / 2.0));
  CHECK(ap.count("q3") == 0);
  CHECK(excluded == std::vector<std::string>{"q3"});
  CHECK(capture.messages().size() == 1);
  auto p = compute_labels(run, qrels, LabelKind::PrecisionAtK, 2);
  CHECK(p.at("q2").value == doctest::Approx(0.5));
  CHECK_THROWS_AS(compute_labels(run, parse_qrels("q9 0 a 1\n"), LabelKind::AveragePrecision), InputError);
}

TEST_CASE("labels file round-trip") {
  std::map<std::string, QueryLabel> labels = {{"q1", {"q1", 0.25, LabelKind::PrecisionAtK}},
                                              {"q2", {"q2", 1.0 / 3.0, LabelKind::PrecisionAtK}}};
  auto values = parse_labels(format_labels(labels));
  CHECK(values.at("q1") == 0.25);
  CHECK(values.at("q2") == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK_THROWS_AS(parse_labels("q1 0.5\nq1 0.6\n"), ParseError);
  CHECK_THROWS_AS(parse_labels("q1 0.5 NDCG\n"), ParseError);
}

TEST_CASE("baseline-only experiment with thirty splits") {
  auto data = synthetic_data(20, 1);
  ExperimentConfig cfg;
  cfg.methods = {"nsigma"};
  cfg.threads = 1;
  auto report = run_experiment(data, cfg);
  CHECK(report.splits.size() == 30);
  for (const auto& s : report.splits) {
    CHECK(s.split.fold1.size() == 10);
    CHECK(s.split.fold2.size() == 10);
    CHECK(s.methods.size() == 1);
    CHECK(std::abs(s.methods.at("nsigma").kendall) <= 1.0);
  }
  CHECK(report.summary.size() == 1);
  CHECK(report.tests.empty());
  CHECK(report.config_hash.size() == 16);
}

TEST_CASE("experiment is deterministic across thread counts") {
  auto data = synthetic_data(16, 2);
  auto cfg = small_config();
  auto a = run_experiment(data, cfg);
  cfg.threads = 3;
  cfg.output_dir = "elsewhere";
  auto b = run_experiment(data, cfg);
  CHECK(report_to_json(a) == report_to_json(b));
  cfg.seed = 8;
  auto c = run_experiment(data, cfg);
  CHECK(report_to_json(a) != report_to_json(c));
  CHECK(a.config_hash != c.config_hash);
}

TEST_CASE("report json round-trip and summary recomputation") {
  auto data = synthetic_data(16, 3);
  auto report = run_experiment(data, small_config());
  CHECK(report.tests.size() == 6);
  auto back = report_from_json(report_to_json(report));
  CHECK(report_to_json(back) == report_to_json(report));
  for (const auto& [m, s] : report.summary) {
    double sum = 0.0;
    for (const auto& split : report.splits) sum += split.methods.at(m).kendall;
    CHECK(s.mean_kendall == doctest::Approx(sum / report.splits.size()).epsilon(1e-12));
  }
  auto resummed = back;
  summarize(resummed);
  CHECK(report_to_json(resummed) == report_to_json(report));
  CHECK_THROWS_AS(report_from_json("{\"splits\": 3}"), FormatError);
  CHECK(report_to_table(report).find("model+nsigma") != std::string::npos);
}

TEST_CASE("fold-2 labels do not influence tuning") {
  auto data = synthetic_data(16, 4);
  auto cfg = small_config();
  cfg.lr_grid = {1e-3, 1e-4};
  cfg.aggregations = {"max", "mean"};
  cfg.x_grid = {25, 50, 100};
  const auto labels = make_experiment_labels(data, cfg);
  std::vector<std::string> qids;
  for (const auto& [q, v] : labels.evaluation) qids.push_back(q);
  const auto split = make_splits(qids, 1, 5).splits[0];

  auto permuted = labels;
  std::vector<double> ev, sv;
  for (const auto& q : split.fold2) {
    ev.push_back(labels.evaluation.at(q));
    sv.push_back(labels.supervision.at(q));
  }
  std::rotate(ev.begin(), ev.begin() + 1, ev.end());
  std::rotate(sv.begin(), sv.begin() + 3, sv.end());
  for (std::size_t i = 0; i < split.fold2.size(); ++i) {
    permuted.evaluation[split.fold2[i]] = ev[i];
    permuted.supervision[split.fold2[i]] = sv[i];
  }
  auto a = run_split(data, cfg, labels, 0, split);
  auto b = run_split(data, cfg, permuted, 0, split);
  CHECK(a.tuned == b.tuned);
  CHECK(a.methods != b.methods);
}

TEST_CASE("a failing split reports its stage and writes a partial report") {
  auto data = synthetic_data(12, 5);
  auto cfg = small_config();
  auto store = std::make_shared<PairEmbeddingStore>(8);
  store->add(data.embeddings->records().front());
  data.embeddings = store;
  test_support::TempDir dir("exp-fail");
  try {
    run_experiment(data, cfg, dir.file("partial.json"));
    FAIL("expected a stage error");
  } catch (const StageError& e) {
    CHECK(e.stage() == "train:model");
    CHECK(e.split() == 0);
    CHECK_FALSE(e.numerical());
  }
  CHECK(report_from_json(read_text_file(dir.file("partial.json"))).splits.empty());
}

TEST_CASE("sweeps produce one row per value") {
  auto data = synthetic_data(12, 6);
  auto cfg = small_config();
  cfg.n_splits = 2;
  cfg.methods = {"nsigma", "model"};
  auto points = run_sweep(data, cfg, SweepAxis::InferDepth, {2, 4, 6});
  REQUIRE(points.size() == 3);
  const auto table = sweep_table(points, SweepAxis::InferDepth);
  CHECK(std::count(table.begin(), table.end(), '\n') == 5);
  CHECK(table.find("method=model") != std::string::npos);
  CHECK(parse_sweep_axis(sweep_axis_name(SweepAxis::GroupSize)) == SweepAxis::GroupSize);
  CHECK(default_sweep_values(SweepAxis::GroupSize) == std::vector<std::size_t>{1, 8, 16, 32, 64});
}

TEST_CASE("full-scale targets exist for the reference collections only") {
  CHECK_FALSE(full_scale_targets("robust04").empty());
  CHECK_FALSE(full_scale_targets("clueweb09b").empty());
  CHECK(full_scale_targets("").empty());
}
