#include "doctest.h"
#include "support.hpp"

#include <sstream>

#include "gqpp/baselines.hpp"
#include "gqpp/cli.hpp"
#include "gqpp/config.hpp"
#include "gqpp/data_model.hpp"

using namespace gqpp;
using test_support::run_line;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

}  // namespace

TEST_CASE("baseline subcommand prints one prediction per query") {
  test_support::TempDir dir("cli-baseline");
  write_text_file(dir.file("run.txt"), run_line("q1", "a", 1, 5) + run_line("q1", "b", 2, 3) +
                                           run_line("q1", "c", 3, 1) + run_line("q2", "a", 1, 2) +
                                           run_line("q2", "b", 2, 2) + run_line("q2", "c", 3, 2));
  auto r = cli({"baseline", "--method", "nqc", "--run", dir.file("run.txt"), "--k", "3"});
  REQUIRE(r.code == 0);
  auto scores = parse_predictions(r.out);
  CHECK(scores.size() == 2);
  CHECK(scores.at("q2") == 0.0);
  CHECK(scores.at("q1") > 0.0);
  CHECK(r.out.find(" nqc\n") != std::string::npos);
  CHECK(cli({"baseline", "--method", "magic", "--run", dir.file("run.txt")}).code == kExitData);
}

TEST_CASE("evaluate correlates a prediction file with labels") {
  test_support::TempDir dir("cli-eval");
  write_text_file(dir.file("pred.txt"), "q1 1\nq2 2\nq3 3\n");
  write_text_file(dir.file("labels.txt"), "q1 0.1 AP@1000\nq2 0.3 AP@1000\nq3 0.2 AP@1000\n");
  auto r = cli({"evaluate", "--pred", dir.file("pred.txt"), "--labels", dir.file("labels.txt")});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("0.333333") != std::string::npos);
  CHECK(r.out.find("pred") != std::string::npos);
}

TEST_CASE("synth, experiment and sweep end to end") {
  test_support::TempDir dir("cli-exp");
  REQUIRE(cli({"synth", "--out", dir.file("data"), "--num-queries", "12", "--docs", "8", "--dim", "8"}).code == 0);
  const std::vector<std::string> common = {"--config", dir.file("data/experiment.conf"), "--methods", "nsigma,model",
                                           "--n-splits", "2", "--seed", "7", "--group-size", "4", "--train-depth", "8",
                                           "--infer-depth", "4", "--epochs", "1", "--lr-grid", "0.001",
                                           "--aggregations", "mean", "--n-heads", "2", "--n-layers", "1",
                                           "--max-positions", "8"};
  auto run = [&](const std::string& cmd, const std::string& out, std::vector<std::string> extra = {}) {
    std::vector<std::string> args = {cmd};
    args.insert(args.end(), common.begin(), common.end());
    args.push_back("--out");
    args.push_back(out);
    args.insert(args.end(), extra.begin(), extra.end());
    return cli(args);
  };
  auto a = run("experiment", dir.file("a"));
  REQUIRE_MESSAGE(a.code == 0, a.err);
  auto b = run("experiment", dir.file("b"));
  REQUIRE(b.code == 0);
  CHECK(read_text_file(dir.file("a/report.json")) == read_text_file(dir.file("b/report.json")));
  CHECK(a.out == b.out);
  CHECK(parse_config(read_text_file(dir.file("a/config.txt"))).seed == 7);

  auto s = run("sweep", dir.file("s"), {"--axis", "group_size", "--values", "1,4"});
  REQUIRE_MESSAGE(s.code == 0, s.err);
  CHECK(read_text_file(dir.file("s/sweep_group_size.tsv")) == s.out);

  auto t = run("train", dir.file("t"));
  REQUIRE_MESSAGE(t.code == 0, t.err);
  auto p = cli({"predict", "--config", dir.file("data/experiment.conf"), "--model", dir.file("t/model.ckpt"),
                "--infer-depth", "4"});
  REQUIRE_MESSAGE(p.code == 0, p.err);
  CHECK(parse_predictions(p.out).size() == 12);
}

TEST_CASE("config subcommand round-trips") {
  auto r = cli({"config", "--seed", "42", "--methods", "wig,smv"});
  REQUIRE(r.code == 0);
  auto cfg = parse_config(r.out);
  CHECK(cfg.seed == 42);
  CHECK(cfg.methods == std::vector<std::string>{"wig", "smv"});
  test_support::TempDir dir("cli-config");
  write_text_file(dir.file("c.conf"), r.out);
  auto again = cli({"config", "--config", dir.file("c.conf")});
  CHECK(again.out == r.out);
  auto over = cli({"config", "--config", dir.file("c.conf"), "--seed", "1"});
  CHECK(parse_config(over.out).seed == 1);
}

TEST_CASE("exit codes") {
  CHECK(cli({}).code == kExitUsage);
  CHECK(cli({"frobnicate"}).code == kExitUsage);
  CHECK(cli({"baseline", "--run"}).code == kExitUsage);
  CHECK(cli({"--help"}).code == kExitOk);
  CHECK(cli({"--version"}).code == kExitOk);
  CHECK(cli({"baseline", "--method", "nqc", "--run", "/nonexistent/run.txt"}).code == kExitData);
  CHECK(cli({"config", "--seed", "abc"}).code != kExitOk);
  test_support::TempDir dir("cli-codes");
  write_text_file(dir.file("bad.conf"), "seed = 1\nthis line is broken\n");
  CHECK(cli({"config", "--config", dir.file("bad.conf")}).code == kExitData);
}
