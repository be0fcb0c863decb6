#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "gqpp/baselines.hpp"
#include "gqpp/config.hpp"
#include "gqpp/data_model.hpp"
#include "gqpp/embeddings.hpp"
#include "gqpp/error.hpp"
#include "gqpp/metrics.hpp"
#include "gqpp/model.hpp"

namespace gqpp {

/// A failed experiment stage. `numerical()` tells whether the root cause
/// was a NumericalError.
class StageError : public Error {
 public:
  StageError(std::string stage, std::size_t split, const std::string& cause, bool numerical)
      : Error("stage '" + stage + "' failed on split " + std::to_string(split) + ": " + cause),
        stage_(std::move(stage)),
        split_(split),
        numerical_(numerical) {}
  const std::string& stage() const noexcept { return stage_; }
  std::size_t split() const noexcept { return split_; }
  bool numerical() const noexcept { return numerical_; }

 private:
  std::string stage_;
  std::size_t split_;
  bool numerical_;
};

/// Per-query labels of the run's judged queries. Queries without a
/// relevant document are skipped with a warning; `excluded` receives their
/// ids. Throws InputError if no run query is judged.
std::map<std::string, QueryLabel> compute_labels(const RetrievalRun& run, const Qrels& qrels, LabelKind kind,
                                                 int k = 10, std::vector<std::string>* excluded = nullptr);

QueryScores label_values(const std::map<std::string, QueryLabel>& labels);

/// `qid value kind` lines.
std::string format_labels(const std::map<std::string, QueryLabel>& labels, int k = 10);
QueryScores parse_labels(std::string_view text);

/// Inputs shared by every split.
struct ExperimentData {
  RetrievalRun run;
  Qrels qrels;
  std::shared_ptr<const PairEmbeddingStore> embeddings;
  std::shared_ptr<const PairTexts> texts;
  QueryScores collection_scores;
  std::map<std::string, int> query_lengths;
};

/// Loads the files named in the config. Throws DataError on missing or
/// malformed inputs.
ExperimentData load_experiment_data(const ExperimentConfig& cfg);

/// Supervision labels (config label kind) and evaluation labels (AP@1000)
/// of the queries taking part in the experiment.
struct ExperimentLabels {
  QueryScores supervision;
  QueryScores evaluation;
  std::vector<std::string> excluded;
};

ExperimentLabels make_experiment_labels(const ExperimentData& data, const ExperimentConfig& cfg);

struct Correlation {
  double pearson = 0.0;
  double kendall = 0.0;
  bool operator==(const Correlation&) const = default;
};

/// Hyper-parameters chosen on fold 1 of one split.
struct TunedParams {
  double x_percent = 50.0;
  std::map<std::string, double> lambda;            // interpolated method -> lambda
  std::map<std::string, double> lr;                // learned method -> learning rate
  std::map<std::string, std::string> aggregation;  // learned method -> aggregation
  bool operator==(const TunedParams&) const = default;
};

struct SplitResult {
  std::size_t index = 0;
  Split split;
  std::map<std::string, Correlation> methods;
  TunedParams tuned;
  bool operator==(const SplitResult&) const = default;
};

struct MethodSummary {
  double mean_pearson = 0.0;
  double mean_kendall = 0.0;
  bool operator==(const MethodSummary&) const = default;
};

struct PairwiseTest {
  std::string a;
  std::string b;
  TTestResult pearson;
  TTestResult kendall;
};

/// Correlation reported at full scale for one method on one collection.
struct FullScaleTarget {
  std::string method;
  double pearson = 0.0;
  double kendall = 0.0;
};

struct ExperimentReport {
  std::string version;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string label_kind;
  std::string dataset_profile;
  std::vector<std::string> methods;
  std::map<std::string, MethodSummary> summary;
  std::vector<PairwiseTest> tests;
  std::vector<SplitResult> splits;
  std::vector<std::string> excluded_queries;
  std::vector<FullScaleTarget> full_scale_targets;
};

/// Runs one split: tunes on fold 1, scores fold 2. Only the fold-1 entries
/// of `labels` are read for tuning and training.
SplitResult run_split(const ExperimentData& data, const ExperimentConfig& cfg, const ExperimentLabels& labels,
                      std::size_t index, const Split& split);

/// Means and all-pairs paired t-tests recomputed from per-split values.
void summarize(ExperimentReport& report);

/// Runs the full protocol. With a non-empty `partial_path`, completed
/// splits are written there before a StageError is rethrown.
ExperimentReport run_experiment(const ExperimentData& data, const ExperimentConfig& cfg,
                                const std::string& partial_path = {});

std::string report_to_json(const ExperimentReport& report);
ExperimentReport report_from_json(const std::string& text);
std::string report_to_table(const ExperimentReport& report);

/// Writes report.json and report.txt into cfg.output_dir.
void write_report(const ExperimentReport& report, const std::string& dir);

/// Full-scale correlations of the reference collections (robust04, gov2,
/// clueweb09b); empty for any other profile.
std::vector<FullScaleTarget> full_scale_targets(const std::string& dataset_profile);

enum class SweepAxis { GroupSize, InferDepth };

SweepAxis parse_sweep_axis(const std::string& name);
std::string sweep_axis_name(SweepAxis axis);
const std::vector<std::size_t>& default_sweep_values(SweepAxis axis);

struct SweepPoint {
  std::size_t value = 0;
  ExperimentReport report;
};

/// One experiment per grid value, varying only the axis. Empty `values`
/// selects the default grid.
std::vector<SweepPoint> run_sweep(const ExperimentData& data, const ExperimentConfig& cfg, SweepAxis axis,
                                  std::vector<std::size_t> values = {});

/// `value mean_pearson mean_kendall` rows for `method` (the first learned
/// method of the config when empty).
std::string sweep_table(const std::vector<SweepPoint>& points, SweepAxis axis, const std::string& method = {});

}  // namespace gqpp
