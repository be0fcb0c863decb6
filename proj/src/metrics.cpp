#include "gqpp/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include <boost/math/distributions/students_t.hpp>

#include "gqpp/error.hpp"
#include "gqpp/rng.hpp"

namespace gqpp {

std::string label_kind_name(LabelKind kind, int k) {
  return kind == LabelKind::PrecisionAtK ? "P@" + std::to_string(k) : "AP@1000";
}

LabelKind parse_label_kind(const std::string& name, int* k_out) {
  if (name == "AP" || name == "AP@1000" || name == "ap") return LabelKind::AveragePrecision;
  if (name.size() > 2 && (name[0] == 'P' || name[0] == 'p') && name[1] == '@') {
    int k = 0;
    auto [ptr, ec] = std::from_chars(name.data() + 2, name.data() + name.size(), k);
    if (ec == std::errc() && ptr == name.data() + name.size() && k >= 1) {
      if (k_out) *k_out = k;
      return LabelKind::PrecisionAtK;
    }
  }
  throw InputError("unknown label kind '" + name + "' (expected P@k or AP@1000)");
}

double precision_at_k(std::span<const std::string> ranked, const Qrels& qrels, const std::string& qid, int k) {
  if (k < 1) throw ContractError("precision_at_k: k must be >= 1");
  std::size_t n = std::min(ranked.size(), static_cast<std::size_t>(k));
  std::size_t hits = 0;
  for (std::size_t i = 0; i < n; ++i) hits += qrels.is_relevant(qid, ranked[i]) ? 1 : 0;
  return static_cast<double>(hits) / k;
}

std::optional<double> average_precision(std::span<const std::string> ranked, const Qrels& qrels,
                                        const std::string& qid, int cutoff) {
  if (cutoff < 1) throw ContractError("average_precision: cutoff must be >= 1");
  std::size_t total_relevant = qrels.relevant_count(qid);
  if (total_relevant == 0) return std::nullopt;
  std::size_t n = std::min(ranked.size(), static_cast<std::size_t>(cutoff));
  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (qrels.is_relevant(qid, ranked[i])) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(i + 1);
    }
  }
  return sum / static_cast<double>(total_relevant);
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ContractError("pearson: length mismatch");
  if (x.size() < 2) throw ContractError("pearson: need at least 2 points");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw DegenerateError("pearson: constant input vector");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double kendall_tau_b(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ContractError("kendall_tau_b: length mismatch");
  if (x.size() < 2) throw ContractError("kendall_tau_b: need at least 2 points");
  // O(n^2) is fine for query sets of a few hundred.
  long long concordant = 0, discordant = 0, ties_x = 0, ties_y = 0;
  const std::size_t n = x.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double dx = x[i] - x[j];
      const double dy = y[i] - y[j];
      if (dx == 0.0) ++ties_x;
      if (dy == 0.0) ++ties_y;
      if (dx == 0.0 || dy == 0.0) continue;
      if ((dx > 0) == (dy > 0))
        ++concordant;
      else
        ++discordant;
    }
  }
  const double pairs = static_cast<double>(n) * static_cast<double>(n - 1) / 2.0;
  const double denom = std::sqrt((pairs - ties_x) * (pairs - ties_y));
  if (denom == 0.0) throw DegenerateError("kendall_tau_b: all values tied");
  return static_cast<double>(concordant - discordant) / denom;
}

double student_t_two_tailed_p(double t, double df) {
  if (!std::isfinite(t)) return 0.0;
  boost::math::students_t dist(df);
  return std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(t))));
}

TTestResult paired_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ContractError("paired_t_test: length mismatch");
  if (a.size() < 2) throw ContractError("paired_t_test: need at least 2 pairs");
  const std::size_t n = a.size();
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = a[i] - b[i];
  const double mean = std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(n);
  double ss = 0.0;
  for (double v : d) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  TTestResult r;
  r.df = n - 1;
  if (sd == 0.0) {
    if (mean == 0.0) return r;
    throw DegenerateError("paired_t_test: zero variance with nonzero mean difference");
  }
  r.t = mean / (sd / std::sqrt(static_cast<double>(n)));
  r.p = student_t_two_tailed_p(r.t, static_cast<double>(r.df));
  return r;
}

SplitPlan make_splits(std::vector<std::string> qids, std::size_t n_splits, std::uint64_t seed) {
  if (qids.size() < 2) throw ContractError("make_splits: need at least 2 queries");
  std::sort(qids.begin(), qids.end());
  if (std::adjacent_find(qids.begin(), qids.end()) != qids.end()) throw InputError("make_splits: duplicate qid");
  SplitPlan plan;
  plan.seed = seed;
  Rng rng(seed);
  const std::size_t half = (qids.size() + 1) / 2;
  for (std::size_t s = 0; s < n_splits; ++s) {
    std::vector<std::string> order = qids;
    rng.shuffle(std::span<std::string>(order));
    Split split;
    split.fold1.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(half));
    split.fold2.assign(order.begin() + static_cast<std::ptrdiff_t>(half), order.end());
    std::sort(split.fold1.begin(), split.fold1.end());
    std::sort(split.fold2.begin(), split.fold2.end());
    plan.splits.push_back(std::move(split));
  }
  return plan;
}

std::string serialize_split_plan(const SplitPlan& plan) {
  std::string out = "# seed " + std::to_string(plan.seed) + "\n";
  for (std::size_t s = 0; s < plan.splits.size(); ++s) {
    for (const auto& q : plan.splits[s].fold1) out += std::to_string(s) + " 1 " + q + "\n";
    for (const auto& q : plan.splits[s].fold2) out += std::to_string(s) + " 2 " + q + "\n";
  }
  return out;
}

SplitPlan parse_split_plan(std::string_view text) {
  std::map<std::size_t, Split> splits;
  std::uint64_t seed = 0;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (line[0] == '#') {
      std::istringstream cs(line.substr(1));
      std::string key;
      if (cs >> key && key == "seed") cs >> seed;
      continue;
    }
    std::istringstream ls(line);
    long long split_index = -1;
    int fold = 0;
    std::string qid, extra;
    if (!(ls >> split_index >> fold >> qid) || (ls >> extra) || split_index < 0 || (fold != 1 && fold != 2))
      throw ParseError(line_no, "expected `split_index fold_index qid` with fold_index 1 or 2");
    auto& split = splits[static_cast<std::size_t>(split_index)];
    (fold == 1 ? split.fold1 : split.fold2).push_back(qid);
  }
  SplitPlan plan;
  plan.seed = seed;
  std::size_t expected = 0;
  for (auto& [index, split] : splits) {
    if (index != expected++) throw FormatError("split plan indices are not contiguous from 0");
    std::sort(split.fold1.begin(), split.fold1.end());
    std::sort(split.fold2.begin(), split.fold2.end());
    std::set<std::string> all(split.fold1.begin(), split.fold1.end());
    for (const auto& q : split.fold2)
      if (!all.insert(q).second) throw FormatError("qid '" + q + "' appears in both folds of split " + std::to_string(index));
    plan.splits.push_back(std::move(split));
  }
  return plan;
}

}  // namespace gqpp
