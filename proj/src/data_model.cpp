#include "gqpp/data_model.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "gqpp/error.hpp"
#include "gqpp/log.hpp"

namespace gqpp {
namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

template <typename Fn>
void for_each_line(std::string_view text, Fn&& fn) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    ++line_no;
    fn(line_no, line);
    pos = end + 1;
  }
}

bool is_blank(std::string_view line) {
  return std::all_of(line.begin(), line.end(),
                     [](char c) { return std::isspace(static_cast<unsigned char>(c)); });
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

bool run_entry_before(const RunEntry& a, const RunEntry& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.docid < b.docid;
}

}  // namespace

Tokens tokenize(std::string_view text) {
  Tokens out;
  std::string current;
  for (char ch : text) {
    auto c = static_cast<unsigned char>(ch);
    if (c >= 0x80 || std::isalnum(c)) {
      current.push_back(static_cast<char>(c < 0x80 ? std::tolower(c) : c));
    } else if (!current.empty()) {
      out.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) out.push_back(std::move(current));
  return out;
}

bool operator==(const RunEntry& a, const RunEntry& b) {
  return a.qid == b.qid && a.docid == b.docid && a.rank == b.rank && a.score == b.score;
}

RetrievalRun::RetrievalRun(Map lists) : lists_(std::move(lists)) {
  for (auto& [qid, entries] : lists_) {
    std::unordered_set<std::string> seen;
    for (const auto& e : entries) {
      if (e.qid != qid) throw InputError("run entry qid '" + e.qid + "' filed under '" + qid + "'");
      if (!seen.insert(e.docid).second)
        throw InputError("duplicate docid '" + e.docid + "' for query '" + qid + "'");
    }
    std::sort(entries.begin(), entries.end(), run_entry_before);
    for (std::size_t i = 0; i < entries.size(); ++i) entries[i].rank = static_cast<int>(i + 1);
  }
}

const std::vector<RunEntry>& RetrievalRun::at(const std::string& qid) const {
  auto it = lists_.find(qid);
  if (it == lists_.end()) throw InputError("query '" + qid + "' not in run");
  return it->second;
}

std::vector<std::string> RetrievalRun::qids() const {
  std::vector<std::string> out;
  out.reserve(lists_.size());
  for (const auto& kv : lists_) out.push_back(kv.first);
  return out;
}

std::size_t RetrievalRun::num_entries() const {
  std::size_t n = 0;
  for (const auto& kv : lists_) n += kv.second.size();
  return n;
}

std::vector<std::string> RetrievalRun::ranked_docids(const std::string& qid, std::size_t depth) const {
  const auto& entries = at(qid);
  std::size_t n = depth == 0 ? entries.size() : std::min(depth, entries.size());
  std::vector<std::string> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(entries[i].docid);
  return out;
}

std::vector<double> RetrievalRun::scores(const std::string& qid) const {
  std::vector<double> out;
  for (const auto& e : at(qid)) out.push_back(e.score);
  return out;
}

RetrievalRun RetrievalRun::subset(const std::vector<std::string>& qids) const {
  RetrievalRun out;
  for (const auto& q : qids) {
    auto it = lists_.find(q);
    if (it != lists_.end()) out.lists_.emplace(q, it->second);
  }
  return out;
}

RetrievalRun parse_run(std::string_view raw_text) {
  RetrievalRun::Map lists;
  std::map<std::string, std::unordered_set<std::string>> seen;
  std::size_t records = 0;
  for_each_line(raw_text, [&](std::size_t line_no, std::string_view line) {
    if (is_blank(line)) return;
    auto cols = split_ws(line);
    if (cols.size() != 6)
      throw ParseError(line_no, "expected 6 columns `qid Q0 docid rank score tag`, got " +
                                    std::to_string(cols.size()));
    RunEntry e;
    e.qid = std::string(cols[0]);
    e.docid = std::string(cols[2]);
    if (!parse_number(cols[3], e.input_rank)) throw ParseError(line_no, "non-numeric rank '" + std::string(cols[3]) + "'");
    if (!parse_number(cols[4], e.score)) throw ParseError(line_no, "non-numeric score '" + std::string(cols[4]) + "'");
    if (!std::isfinite(e.score)) throw ParseError(line_no, "non-finite score");
    if (!seen[e.qid].insert(e.docid).second)
      throw ParseError(line_no, "duplicate docid '" + e.docid + "' for query '" + e.qid + "'");
    lists[e.qid].push_back(std::move(e));
    ++records;
  });
  if (records == 0) throw InputError("run is empty");
  return RetrievalRun(std::move(lists));
}

RetrievalRun read_run_file(const std::string& path) { return parse_run(read_text_file(path)); }

std::string serialize_run(const RetrievalRun& run, std::string_view tag) {
  std::string out;
  char buf[64];
  for (const auto& [qid, entries] : run.lists()) {
    for (const auto& e : entries) {
      std::snprintf(buf, sizeof buf, "%.17g", e.score);
      out += qid + " Q0 " + e.docid + " " + std::to_string(e.rank) + " " + buf + " ";
      out += tag;
      out += '\n';
    }
  }
  return out;
}

void Qrels::set(const QrelsRecord& r) {
  if (r.grade < 0) throw InputError("negative relevance grade");
  judgments_[r.qid][r.docid] = r.grade;
}

int Qrels::grade(const std::string& qid, const std::string& docid) const {
  auto q = judgments_.find(qid);
  if (q == judgments_.end()) return -1;
  auto d = q->second.find(docid);
  return d == q->second.end() ? -1 : d->second;
}

std::size_t Qrels::relevant_count(const std::string& qid) const {
  auto q = judgments_.find(qid);
  if (q == judgments_.end()) return 0;
  return static_cast<std::size_t>(std::count_if(q->second.begin(), q->second.end(),
                                                 [](const auto& kv) { return kv.second >= 1; }));
}

std::vector<std::string> Qrels::qids() const {
  std::vector<std::string> out;
  for (const auto& kv : judgments_) out.push_back(kv.first);
  return out;
}

std::vector<QrelsRecord> Qrels::records() const {
  std::vector<QrelsRecord> out;
  for (const auto& [qid, docs] : judgments_)
    for (const auto& [docid, grade] : docs) out.push_back({qid, docid, grade});
  return out;
}

std::size_t Qrels::size() const {
  std::size_t n = 0;
  for (const auto& kv : judgments_) n += kv.second.size();
  return n;
}

Qrels parse_qrels(std::string_view raw_text) {
  Qrels qrels;
  for_each_line(raw_text, [&](std::size_t line_no, std::string_view line) {
    if (is_blank(line)) return;
    auto cols = split_ws(line);
    if (cols.size() != 4)
      throw ParseError(line_no, "expected 4 columns `qid 0 docid grade`, got " + std::to_string(cols.size()));
    QrelsRecord r{std::string(cols[0]), std::string(cols[2]), 0};
    if (!parse_number(cols[3], r.grade)) throw ParseError(line_no, "non-numeric grade '" + std::string(cols[3]) + "'");
    if (r.grade < 0) throw ParseError(line_no, "negative grade " + std::to_string(r.grade));
    if (qrels.grade(r.qid, r.docid) >= 0)
      warn("qrels line " + std::to_string(line_no) + ": duplicate judgment for (" + r.qid + ", " +
           r.docid + "), keeping the last one");
    qrels.set(r);
  });
  return qrels;
}

Qrels read_qrels_file(const std::string& path) { return parse_qrels(read_text_file(path)); }

std::string serialize_qrels(const Qrels& qrels) {
  std::string out;
  for (const auto& r : qrels.records()) out += r.qid + " 0 " + r.docid + " " + std::to_string(r.grade) + "\n";
  return out;
}

namespace {

template <typename Record>
std::vector<Record> parse_id_text(std::string_view raw_text, const char* what) {
  std::vector<Record> out;
  std::unordered_set<std::string> seen;
  for_each_line(raw_text, [&](std::size_t line_no, std::string_view line) {
    if (is_blank(line)) return;
    auto tab = line.find('\t');
    if (tab == std::string_view::npos) throw ParseError(line_no, std::string("expected `id<TAB>text` in ") + what);
    std::string id(line.substr(0, tab));
    while (!id.empty() && std::isspace(static_cast<unsigned char>(id.back()))) id.pop_back();
    if (id.empty()) throw ParseError(line_no, "empty identifier");
    if (!seen.insert(id).second) throw ParseError(line_no, "duplicate identifier '" + id + "'");
    out.push_back(Record{id, tokenize(line.substr(tab + 1))});
  });
  return out;
}

}  // namespace

std::vector<QueryRecord> parse_queries(std::string_view raw_text) {
  auto out = parse_id_text<QueryRecord>(raw_text, "queries");
  for (const auto& q : out)
    if (q.text.empty()) throw InputError("query '" + q.qid + "' has no tokens");
  return out;
}

std::vector<DocRecord> parse_corpus(std::string_view raw_text) {
  return parse_id_text<DocRecord>(raw_text, "corpus");
}

std::vector<PassageWindow> slice_passages(const Tokens& doc_tokens, std::size_t window, std::size_t stride) {
  if (window == 0 || stride == 0 || stride > window)
    throw ContractError("slice_passages: need window > 0 and 0 < stride <= window");
  if (doc_tokens.empty()) throw InputError("slice_passages: empty document");
  std::vector<PassageWindow> out;
  std::size_t covered = 0;
  for (std::size_t start = 0; start < doc_tokens.size(); start += stride) {
    std::size_t end = std::min(start + window, doc_tokens.size());
    if (end <= covered) break;
    out.push_back({start, Tokens(doc_tokens.begin() + static_cast<std::ptrdiff_t>(start),
                                 doc_tokens.begin() + static_cast<std::ptrdiff_t>(end))});
    covered = end;
  }
  return out;
}

double lexical_overlap_score(const QueryRecord& query, const PassageWindow& passage) {
  std::unordered_set<std::string> present(passage.tokens.begin(), passage.tokens.end());
  double n = 0;
  for (const auto& t : query.text) n += present.count(t) ? 1.0 : 0.0;
  return n;
}

std::size_t select_top_passage(const QueryRecord& query, const std::vector<PassageWindow>& passages,
                               const PassageScorer& scorer) {
  if (passages.empty()) throw ContractError("select_top_passage: no passages");
  std::size_t best = 0;
  double best_score = scorer(query, passages[0]);
  for (std::size_t i = 1; i < passages.size(); ++i) {
    double s = scorer(query, passages[i]);
    if (s > best_score || (s == best_score && passages[i].start < passages[best].start)) {
      best = i;
      best_score = s;
    }
  }
  return best;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path + "'");
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw InputError("write failed for '" + path + "'");
}

}  // namespace gqpp
