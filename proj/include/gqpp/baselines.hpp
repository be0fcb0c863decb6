#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gqpp/data_model.hpp"

namespace gqpp {

/// Inputs of the score-distribution predictors for one query.
struct ScoreListContext {
  std::vector<double> scores;    // descending top-m retrieval scores
  double collection_score = 0;   // s(C)
  int query_length = 1;          // |q|

  /// Throws InputError on an empty or unsorted list or query_length < 1.
  void validate() const;
};

/// Population standard deviation of the top-k scores.
double sigma_k(const ScoreListContext& ctx, std::size_t k);
/// sigma_k / |s(C)|.
double nqc(const ScoreListContext& ctx, std::size_t k);
/// (1 / (k sqrt|q|)) * sum_{i<=k} (s_i - s(C)).
double wig(const ScoreListContext& ctx, std::size_t k);
/// Mean of s'_i |ln(s'_i / mu')| over the top k, divided by |s(C)|. Scores
/// are shifted by -min + 1e-6 when any score is <= 0.
double smv(const ScoreListContext& ctx, std::size_t k);
/// Standard deviation of the scores within x% of the top score, over the
/// full list, divided by |s(C)|. Shifted like smv when the top score is <= 0.
double n_sigma_x(const ScoreListContext& ctx, double x_percent = 50.0);

inline constexpr double kPositiveShiftEpsilon = 1e-6;

enum class BaselineMethod { SigmaK, Nqc, Wig, Smv, NSigmaX };

std::string baseline_name(BaselineMethod m);
std::optional<BaselineMethod> parse_baseline(const std::string& name);
const std::vector<BaselineMethod>& all_baselines();

struct BaselineParams {
  std::size_t k = 100;      // clamped to the list length
  double x_percent = 50.0;  // n(sigma_X%) only
};

double evaluate_baseline(BaselineMethod m, const ScoreListContext& ctx, const BaselineParams& params);

using QueryScores = std::map<std::string, double>;

/// s(C) defaults to the mean score over the full retrieved list of the query;
/// entries in `collection_scores` override it. Query lengths default to 1.
std::map<std::string, ScoreListContext> contexts_from_run(const RetrievalRun& run,
                                                          const QueryScores& collection_scores = {},
                                                          const std::map<std::string, int>& query_lengths = {});

QueryScores evaluate_baseline(BaselineMethod m, const std::map<std::string, ScoreListContext>& contexts,
                              const BaselineParams& params);

/// Lines `qid s_c`.
QueryScores parse_collection_scores(std::string_view text);

/// Per-set z-score; a constant set maps to all zeros.
QueryScores z_normalize(const QueryScores& values);

struct InterpolationConfig {
  double lambda = 0.5;  // weight of the primary predictor
};

/// lambda * z(primary) + (1 - lambda) * z(baseline). Throws InputError on
/// mismatched qid sets.
QueryScores interpolate(const QueryScores& primary, const QueryScores& baseline, const InterpolationConfig& cfg);

/// Lines `qid score method` (method column omitted when empty).
std::string format_predictions(const QueryScores& scores, const std::string& method);
/// Reads `qid score [method]` lines.
QueryScores parse_predictions(std::string_view text);

}  // namespace gqpp
