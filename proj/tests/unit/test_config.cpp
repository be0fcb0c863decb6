#include "doctest.h"
#include "support.hpp"

#include "gqpp/config.hpp"
#include "gqpp/error.hpp"

using namespace gqpp;

TEST_CASE("defaults dump and parse back unchanged") {
  ExperimentConfig cfg;
  CHECK(parse_config(dump_config(cfg)) == cfg);
}

TEST_CASE("a customised config round-trips") {
  ExperimentConfig cfg;
  cfg.run_path = "runs/bm25.txt";
  cfg.methods = {"nqc", "model"};
  cfg.n_splits = 7;
  cfg.seed = 123456789012345ull;
  cfg.lr_grid = {3e-4, 1.5e-5};
  cfg.lambda_grid = {0.25, 0.75};
  cfg.x_grid = {12.5};
  cfg.aggregations = {"first"};
  cfg.strategy = "query+doc";
  cfg.warmup_fraction = 0.3;
  auto back = parse_config(dump_config(cfg));
  CHECK(back == cfg);
  CHECK(dump_config(back) == dump_config(cfg));
}

TEST_CASE("config text syntax") {
  auto cfg = parse_config("# comment\n\n  seed = 9  # trailing\nmethods = nqc, wig\nrun = \"a b.txt\"\n");
  CHECK(cfg.seed == 9);
  CHECK(cfg.methods == std::vector<std::string>{"nqc", "wig"});
  CHECK(cfg.run_path == "a b.txt");
  CHECK_THROWS_AS(parse_config("seed 9\n"), ParseError);
  CHECK_THROWS_AS(parse_config("no_such_key = 1\n"), InputError);
  CHECK_THROWS_AS(parse_config("seed = nine\n"), InputError);
  try {
    parse_config("seed = 1\nbroken\n");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
}

TEST_CASE("profiles") {
  auto cfg = parse_config("dataset_profile = clueweb09b\n");
  CHECK(cfg.label_kind == "AP@1000");
  cfg = parse_config("dataset_profile = robust04\n");
  CHECK(cfg.label_kind == "P@10");
  cfg = parse_config("model_profile = small\n");
  CHECK(cfg.group_size == 128);
  CHECK(cfg.max_positions >= 128);
  cfg = parse_config("model_profile = large\ngroup_size = 4\n");
  CHECK(cfg.group_size == 4);
  CHECK_THROWS_AS(parse_config("model_profile = huge\n"), InputError);
  CHECK_THROWS_AS(parse_config("dataset_profile = msmarco\n"), InputError);
}

TEST_CASE("validation") {
  auto invalid = [](const std::string& text) {
    auto cfg = parse_config(text);
    CHECK_THROWS_AS(cfg.validate(), InputError);
  };
  ExperimentConfig().validate();
  invalid("methods = nqc, magic\n");
  invalid("n_splits = 0\n");
  invalid("lambda_grid = 1.5\n");
  invalid("x_grid = 0\n");
  invalid("lr_grid = 0\n");
  invalid("d_model = 10\nn_heads = 4\n");
  invalid("group_size = 100\nmax_positions = 64\n");
  invalid("strategy = sideways\n");
  invalid("label = NDCG\n");
  invalid("encoder = bert\n");
}

TEST_CASE("every key appears in the dump") {
  const auto dump = "\n" + dump_config(ExperimentConfig{});
  for (const auto& key : config_keys()) {
    if (key == "model_profile" || key == "dataset_profile") continue;
    CHECK_MESSAGE(dump.find("\n" + key + " = ") != std::string::npos, key);
  }
}

TEST_CASE("train config mirrors the experiment config") {
  auto cfg = parse_config("group_size = 4\nstrategy = query\ninference_strategy = doc\naggregations = max\n");
  auto t = make_train_config(cfg);
  CHECK(t.group_size == 4);
  CHECK(t.strategy == GroupingStrategy::QueryOrder);
  CHECK(t.resolved_inference_strategy() == GroupingStrategy::DocOrder);
  CHECK(t.aggregations == std::vector<AggregationMethod>{AggregationMethod::Max});
  CHECK(make_train_config(ExperimentConfig{}).resolved_inference_strategy() == GroupingStrategy::DocOrder);
}
