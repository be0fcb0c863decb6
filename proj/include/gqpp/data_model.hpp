#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace gqpp {

using Tokens = std::vector<std::string>;

/// Case-folds ASCII letters and splits on every non-alphanumeric byte.
/// Bytes >= 0x80 are kept inside tokens so UTF-8 words stay whole.
Tokens tokenize(std::string_view text);

struct QueryRecord {
  std::string qid;
  Tokens text;
};

struct DocRecord {
  std::string docid;
  Tokens text;
};

struct RunEntry {
  std::string qid;
  std::string docid;
  int rank = 0;        // position after score ordering, 1..m
  double score = 0.0;  // retrieval score s(d)
  int input_rank = 0;  // rank column as read from the file
};

/// Per-query ranked lists, ordered by descending score then ascending docid.
class RetrievalRun {
 public:
  using Map = std::map<std::string, std::vector<RunEntry>>;

  RetrievalRun() = default;
  /// Sorts every list and renumbers ranks; throws InputError on mismatched
  /// qids or duplicate docids within a query.
  explicit RetrievalRun(Map lists);

  const Map& lists() const { return lists_; }
  const std::vector<RunEntry>& at(const std::string& qid) const;
  bool contains(const std::string& qid) const { return lists_.count(qid) != 0; }
  std::vector<std::string> qids() const;
  std::size_t num_queries() const { return lists_.size(); }
  std::size_t num_entries() const;

  /// Ranked docids of one query, truncated to depth (0 = all).
  std::vector<std::string> ranked_docids(const std::string& qid, std::size_t depth = 0) const;
  std::vector<double> scores(const std::string& qid) const;

  /// Restricts to the given queries (unknown qids are ignored).
  RetrievalRun subset(const std::vector<std::string>& qids) const;

  bool operator==(const RetrievalRun&) const = default;

 private:
  Map lists_;
};

bool operator==(const RunEntry& a, const RunEntry& b);

/// Parses `qid Q0 docid rank score tag` lines.
RetrievalRun parse_run(std::string_view raw_text);
RetrievalRun read_run_file(const std::string& path);
std::string serialize_run(const RetrievalRun& run, std::string_view tag = "gqpp");

struct QrelsRecord {
  std::string qid;
  std::string docid;
  int grade = 0;
};

class Qrels {
 public:
  void set(const QrelsRecord& record);
  /// Grade of a judged pair, or -1 when unjudged.
  int grade(const std::string& qid, const std::string& docid) const;
  bool is_relevant(const std::string& qid, const std::string& docid) const {
    return grade(qid, docid) >= 1;
  }
  /// Total number of judged-relevant documents of a query.
  std::size_t relevant_count(const std::string& qid) const;
  bool has_query(const std::string& qid) const { return judgments_.count(qid) != 0; }
  std::vector<std::string> qids() const;
  std::vector<QrelsRecord> records() const;
  std::size_t size() const;

 private:
  std::map<std::string, std::map<std::string, int>> judgments_;
};

/// Parses `qid 0 docid grade` lines; later duplicates replace earlier ones.
Qrels parse_qrels(std::string_view raw_text);
Qrels read_qrels_file(const std::string& path);
std::string serialize_qrels(const Qrels& qrels);

/// `id<TAB>text` lines, used for queries and for corpus documents.
std::vector<QueryRecord> parse_queries(std::string_view raw_text);
std::vector<DocRecord> parse_corpus(std::string_view raw_text);

struct PassageWindow {
  std::size_t start = 0;
  Tokens tokens;
};

/// Sliding windows at offsets 0, stride, 2*stride, ...; a window is emitted
/// only if it covers a token no earlier window covered.
std::vector<PassageWindow> slice_passages(const Tokens& doc_tokens, std::size_t window = 150,
                                          std::size_t stride = 75);

using PassageScorer = std::function<double(const QueryRecord&, const PassageWindow&)>;

/// Number of query tokens (with multiplicity) that occur in the passage.
double lexical_overlap_score(const QueryRecord& query, const PassageWindow& passage);

/// Argmax of the scorer; ties go to the smallest start offset.
std::size_t select_top_passage(const QueryRecord& query, const std::vector<PassageWindow>& passages,
                               const PassageScorer& scorer = lexical_overlap_score);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, std::string_view contents);

}  // namespace gqpp
