#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gqpp/data_model.hpp"

namespace gqpp {

enum class LabelKind { PrecisionAtK, AveragePrecision };

struct QueryLabel {
  std::string qid;
  double value = 0.0;
  LabelKind kind = LabelKind::AveragePrecision;
};

/// "P@10" for precision labels, "AP@1000" for average precision.
std::string label_kind_name(LabelKind kind, int k = 10);
/// Parses "P@k" (returning k) or "AP@1000"/"AP".
LabelKind parse_label_kind(const std::string& name, int* k_out = nullptr);

/// Relevant documents among the top min(k, m), divided by k. Unjudged
/// documents count as nonrelevant.
double precision_at_k(std::span<const std::string> ranked_docids, const Qrels& qrels, const std::string& qid,
                      int k);

/// Average precision over the top `cutoff` documents, normalised by every
/// judged-relevant document of the query. Returns nullopt for a query with
/// no relevant documents; such queries are excluded from correlations.
std::optional<double> average_precision(std::span<const std::string> ranked_docids, const Qrels& qrels,
                                        const std::string& qid, int cutoff = 1000);

/// Sample Pearson correlation. Throws DegenerateError for a constant vector.
double pearson(std::span<const double> x, std::span<const double> y);

/// Tie-aware Kendall tau-b. Throws DegenerateError if x or y is all ties.
double kendall_tau_b(std::span<const double> x, std::span<const double> y);

struct TTestResult {
  double t = 0.0;
  double p = 1.0;
  std::size_t df = 0;
};

/// Paired two-tailed Student t-test over a - b.
TTestResult paired_t_test(std::span<const double> a, std::span<const double> b);

/// Two-tailed tail mass of Student t with df degrees of freedom.
double student_t_two_tailed_p(double t, double df);

struct Split {
  std::vector<std::string> fold1;  // train / tune
  std::vector<std::string> fold2;  // test
  bool operator==(const Split&) const = default;
};

struct SplitPlan {
  std::uint64_t seed = 0;
  std::vector<Split> splits;
  bool operator==(const SplitPlan&) const = default;
};

/// Balanced random bipartitions, |fold1| = ceil(N/2). Folds are sorted.
SplitPlan make_splits(std::vector<std::string> qids, std::size_t n_splits = 30, std::uint64_t seed = 0);

/// `split_index fold_index qid` lines, fold_index 1 or 2.
std::string serialize_split_plan(const SplitPlan& plan);
SplitPlan parse_split_plan(std::string_view text);

}  // namespace gqpp
