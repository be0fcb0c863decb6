#include "gqpp/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <span>
#include <sstream>

#include "gqpp/error.hpp"

namespace gqpp {
namespace {

void check_depth(const ScoreListContext& ctx, std::size_t k, const char* who) {
  if (k < 1 || k > ctx.scores.size())
    throw ContractError(std::string(who) + ": need 1 <= k <= " + std::to_string(ctx.scores.size()) + ", got k=" +
                        std::to_string(k));
}

double abs_collection_score(const ScoreListContext& ctx, const char* who) {
  if (ctx.collection_score == 0.0) throw DegenerateError(std::string(who) + ": collection score s(C) is 0");
  return std::fabs(ctx.collection_score);
}

double population_sd(std::span<const double> v) {
  const double n = static_cast<double>(v.size());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / n);
}

}  // namespace

void ScoreListContext::validate() const {
  if (scores.empty()) throw InputError("score list is empty");
  if (!std::is_sorted(scores.begin(), scores.end(), std::greater<>())) throw InputError("score list is not descending");
  if (query_length < 1) throw InputError("query length must be >= 1");
}

double sigma_k(const ScoreListContext& ctx, std::size_t k) {
  check_depth(ctx, k, "sigma_k");
  return population_sd(std::span<const double>(ctx.scores.data(), k));
}

double nqc(const ScoreListContext& ctx, std::size_t k) {
  check_depth(ctx, k, "nqc");
  return sigma_k(ctx, k) / abs_collection_score(ctx, "nqc");
}

double wig(const ScoreListContext& ctx, std::size_t k) {
  check_depth(ctx, k, "wig");
  double gain = 0.0;
  for (std::size_t i = 0; i < k; ++i) gain += ctx.scores[i] - ctx.collection_score;
  return gain / (static_cast<double>(k) * std::sqrt(static_cast<double>(ctx.query_length)));
}

double smv(const ScoreListContext& ctx, std::size_t k) {
  check_depth(ctx, k, "smv");
  const double sc = abs_collection_score(ctx, "smv");
  const double min_all = ctx.scores.back();
  const double shift = min_all <= 0.0 ? -min_all + kPositiveShiftEpsilon : 0.0;
  double mean = 0.0;
  for (std::size_t i = 0; i < k; ++i) mean += ctx.scores[i] + shift;
  mean /= static_cast<double>(k);
  double acc = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const double s = ctx.scores[i] + shift;
    acc += s * std::fabs(std::log(s / mean));
  }
  return acc / static_cast<double>(k) / sc;
}

double n_sigma_x(const ScoreListContext& ctx, double x_percent) {
  if (!(x_percent > 0.0 && x_percent <= 100.0)) throw ContractError("n_sigma_x: need 0 < x_percent <= 100");
  if (ctx.scores.empty()) throw ContractError("n_sigma_x: empty score list");
  const double sc = abs_collection_score(ctx, "n_sigma_x");
  const double top = ctx.scores.front();
  const double shift = top <= 0.0 ? -ctx.scores.back() + kPositiveShiftEpsilon : 0.0;
  const double threshold = (x_percent / 100.0) * (top + shift);
  std::vector<double> selected;
  for (double s : ctx.scores)
    if (s + shift >= threshold) selected.push_back(s);
  if (selected.size() <= 1) return 0.0;
  return population_sd(selected) / sc;
}

std::string baseline_name(BaselineMethod m) {
  switch (m) {
    case BaselineMethod::SigmaK: return "sigma_k";
    case BaselineMethod::Nqc: return "nqc";
    case BaselineMethod::Wig: return "wig";
    case BaselineMethod::Smv: return "smv";
    case BaselineMethod::NSigmaX: return "nsigma";
  }
  return "?";
}

std::optional<BaselineMethod> parse_baseline(const std::string& name) {
  for (auto m : all_baselines())
    if (baseline_name(m) == name) return m;
  if (name == "n_sigma_x") return BaselineMethod::NSigmaX;
  return std::nullopt;
}

const std::vector<BaselineMethod>& all_baselines() {
  static const std::vector<BaselineMethod> all = {BaselineMethod::SigmaK, BaselineMethod::Nqc, BaselineMethod::Wig,
                                                  BaselineMethod::Smv, BaselineMethod::NSigmaX};
  return all;
}

double evaluate_baseline(BaselineMethod m, const ScoreListContext& ctx, const BaselineParams& params) {
  const std::size_t k = std::min(params.k, ctx.scores.size());
  switch (m) {
    case BaselineMethod::SigmaK: return sigma_k(ctx, k);
    case BaselineMethod::Nqc: return nqc(ctx, k);
    case BaselineMethod::Wig: return wig(ctx, k);
    case BaselineMethod::Smv: return smv(ctx, k);
    case BaselineMethod::NSigmaX: return n_sigma_x(ctx, params.x_percent);
  }
  throw ContractError("unknown baseline");
}

std::map<std::string, ScoreListContext> contexts_from_run(const RetrievalRun& run, const QueryScores& collection_scores,
                                                          const std::map<std::string, int>& query_lengths) {
  std::map<std::string, ScoreListContext> out;
  for (const auto& [qid, entries] : run.lists()) {
    ScoreListContext ctx;
    for (const auto& e : entries) ctx.scores.push_back(e.score);
    if (auto it = collection_scores.find(qid); it != collection_scores.end()) {
      ctx.collection_score = it->second;
    } else {
      ctx.collection_score = std::accumulate(ctx.scores.begin(), ctx.scores.end(), 0.0) /
                             static_cast<double>(ctx.scores.size());
    }
    if (auto it = query_lengths.find(qid); it != query_lengths.end()) ctx.query_length = it->second;
    ctx.validate();
    out.emplace(qid, std::move(ctx));
  }
  return out;
}

QueryScores evaluate_baseline(BaselineMethod m, const std::map<std::string, ScoreListContext>& contexts,
                              const BaselineParams& params) {
  QueryScores out;
  for (const auto& [qid, ctx] : contexts) out[qid] = evaluate_baseline(m, ctx, params);
  return out;
}

QueryScores parse_collection_scores(std::string_view text) {
  QueryScores out;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    std::string qid, extra;
    double value = 0;
    if (!(ls >> qid >> value) || (ls >> extra)) throw ParseError(line_no, "expected `qid s_c`");
    out[qid] = value;
  }
  return out;
}

QueryScores z_normalize(const QueryScores& values) {
  QueryScores out;
  if (values.empty()) return out;
  std::vector<double> v;
  for (const auto& kv : values) v.push_back(kv.second);
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  const double sd = population_sd(v);
  for (const auto& [qid, x] : values) out[qid] = sd > 0.0 ? (x - mean) / sd : 0.0;
  return out;
}

QueryScores interpolate(const QueryScores& primary, const QueryScores& baseline, const InterpolationConfig& cfg) {
  if (!(cfg.lambda >= 0.0 && cfg.lambda <= 1.0)) throw ContractError("interpolate: lambda must lie in [0, 1]");
  if (primary.size() != baseline.size() ||
      !std::equal(primary.begin(), primary.end(), baseline.begin(),
                  [](const auto& a, const auto& b) { return a.first == b.first; }))
    throw InputError("interpolate: primary and baseline cover different queries");
  const auto zp = z_normalize(primary);
  const auto zb = z_normalize(baseline);
  QueryScores out;
  for (const auto& [qid, p] : zp) out[qid] = cfg.lambda * p + (1.0 - cfg.lambda) * zb.at(qid);
  return out;
}

std::string format_predictions(const QueryScores& scores, const std::string& method) {
  std::string out;
  char buf[64];
  for (const auto& [qid, s] : scores) {
    std::snprintf(buf, sizeof buf, "%.17g", s);
    out += qid + " " + buf;
    if (!method.empty()) out += " " + method;
    out += "\n";
  }
  return out;
}

QueryScores parse_predictions(std::string_view text) {
  QueryScores out;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    std::string qid, method, extra;
    double value = 0;
    if (!(ls >> qid >> value)) throw ParseError(line_no, "expected `qid score [method]`");
    ls >> method;
    if (ls >> extra) throw ParseError(line_no, "too many columns");
    if (!out.emplace(qid, value).second) throw ParseError(line_no, "duplicate qid '" + qid + "'");
  }
  return out;
}

}  // namespace gqpp
