#include "doctest.h"
#include "support.hpp"

#include "gqpp/data_model.hpp"
#include "gqpp/error.hpp"
#include "gqpp/log.hpp"

using namespace gqpp;

TEST_CASE("tokenize folds case and splits on punctuation") {
  CHECK(tokenize("Hello, World-42!") == Tokens{"hello", "world", "42"});
  CHECK(tokenize("  ").empty());
  CHECK(tokenize("caf\xc3\xa9 au lait") == Tokens{"caf\xc3\xa9", "au", "lait"});
}

TEST_CASE("parse_run reads one TREC line") {
  auto run = parse_run("301 Q0 FBIS3-1 1 14.27 QL\n");
  REQUIRE(run.num_queries() == 1);
  const auto& e = run.at("301").at(0);
  CHECK(e.docid == "FBIS3-1");
  CHECK(e.rank == 1);
  CHECK(e.score == doctest::Approx(14.27).epsilon(1e-15));
}

TEST_CASE("parse_run orders by descending score then docid") {
  auto run = parse_run("q Q0 a 1 2.0 t\nq Q0 b 2 5.0 t\nq Q0 c 3 5.0 t\n");
  CHECK(run.ranked_docids("q") == std::vector<std::string>{"b", "c", "a"});
  CHECK(run.scores("q") == std::vector<double>{5.0, 5.0, 2.0});
  CHECK(run.at("q")[2].rank == 3);
  CHECK(run.at("q")[2].input_rank == 1);
}

TEST_CASE("parse_run errors carry the line number") {
  try {
    parse_run("301 Q0 doc1 1 abc QL\n");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 1);
  }
  CHECK_THROWS_AS(parse_run("q Q0 d 1 1.0\n"), ParseError);
  CHECK_THROWS_AS(parse_run("q Q0 d 1 1.0 t\nq Q0 d 2 0.5 t\n"), ParseError);
  CHECK_THROWS_AS(parse_run(""), InputError);
  CHECK_THROWS_AS(parse_run("q Q0 d 1 nan t\n"), ParseError);
}

TEST_CASE("run serialisation round-trips") {
  auto run = parse_run("q1 Q0 a 1 3.25 t\nq1 Q0 b 2 1.0e-3 t\nq2 Q0 c 1 -4 t\n");
  CHECK(parse_run(serialize_run(run)) == run);
  CHECK(run.subset({"q2", "zz"}).qids() == std::vector<std::string>{"q2"});
  CHECK(run.num_entries() == 3);
  CHECK(run.ranked_docids("q1", 1) == std::vector<std::string>{"a"});
}

TEST_CASE("parse_qrels grades") {
  auto q = parse_qrels("301 0 FBIS3-1 1\n301 0 FBIS3-2 0\n");
  CHECK(q.grade("301", "FBIS3-1") == 1);
  CHECK(q.grade("301", "FBIS3-2") == 0);
  CHECK(q.grade("301", "other") == -1);
  CHECK(q.is_relevant("301", "FBIS3-1"));
  CHECK_FALSE(q.is_relevant("301", "FBIS3-2"));
  CHECK(q.relevant_count("301") == 1);
  CHECK_THROWS_AS(parse_qrels("301 0 d1 -1\n"), ParseError);
  CHECK_THROWS_AS(parse_qrels("301 0 d1\n"), ParseError);
}

TEST_CASE("duplicate qrels judgments warn and the last one wins") {
  WarningCapture capture;
  auto q = parse_qrels("1 0 d 0\n1 0 d 2\n");
  CHECK(q.grade("1", "d") == 2);
  CHECK(capture.messages().size() == 1);
  CHECK(parse_qrels(serialize_qrels(q)).records().size() == 1);
}

TEST_CASE("queries and corpus files") {
  auto qs = parse_queries("301\tInternational Organized Crime\n302\tPolio\n");
  REQUIRE(qs.size() == 2);
  CHECK(qs[0].text == Tokens{"international", "organized", "crime"});
  CHECK_THROWS_AS(parse_queries("301 no tab\n"), ParseError);
  CHECK_THROWS_AS(parse_corpus("d\tx\nd\ty\n"), ParseError);
}

namespace {
Tokens numbered(std::size_t n) {
  Tokens t;
  for (std::size_t i = 0; i < n; ++i) t.push_back("t" + std::to_string(i));
  return t;
}

std::vector<std::size_t> offsets(const std::vector<PassageWindow>& w) {
  std::vector<std::size_t> out;
  for (const auto& p : w) out.push_back(p.start);
  return out;
}
}  // namespace

TEST_CASE("passage windows") {
  CHECK(offsets(slice_passages(numbered(150))) == std::vector<std::size_t>{0});
  CHECK(offsets(slice_passages(numbered(151))) == std::vector<std::size_t>{0, 75});
  // The window at 225 would cover nothing new: 150 already reaches token 299.
  CHECK(offsets(slice_passages(numbered(300))) == std::vector<std::size_t>{0, 75, 150});
  CHECK(offsets(slice_passages(numbered(10))) == std::vector<std::size_t>{0});
  CHECK_THROWS_AS(slice_passages({}), InputError);

  // Every token lies in some window, and every window adds a new token.
  for (std::size_t n : {1u, 74u, 75u, 76u, 149u, 226u, 301u, 1000u}) {
    auto w = slice_passages(numbered(n));
    std::size_t covered = 0;
    for (const auto& p : w) {
      CHECK(p.start + p.tokens.size() > covered);
      covered = p.start + p.tokens.size();
    }
    CHECK(covered == n);
  }
}

TEST_CASE("top passage selection") {
  QueryRecord q{"q", {"a", "b"}};
  std::vector<PassageWindow> single = {{0, {"x"}}};
  CHECK(select_top_passage(q, single) == 0);
  std::vector<PassageWindow> two = {{0, {"a", "x"}}, {75, {"a", "b"}}};
  CHECK(select_top_passage(q, two) == 1);
  std::vector<PassageWindow> tie = {{0, {"a"}}, {75, {"b"}}};
  CHECK(select_top_passage(q, tie) == 0);
}
