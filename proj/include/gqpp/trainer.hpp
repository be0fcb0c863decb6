#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "gqpp/baselines.hpp"
#include "gqpp/grouping.hpp"
#include "gqpp/model.hpp"

namespace gqpp {

struct TrainConfig {
  std::size_t epochs = 5;
  std::size_t group_size = 8;
  std::vector<double> lr_grid = {1e-4, 1e-5, 1e-6};
  double warmup_fraction = 0.10;
  std::size_t train_depth = 100;
  std::size_t infer_depth = 25;
  GroupingStrategy strategy = GroupingStrategy::RQD;
  /// Defaults to default_inference_strategy(strategy).
  std::optional<GroupingStrategy> inference_strategy;
  std::vector<AggregationMethod> aggregations = {AggregationMethod::Max, AggregationMethod::Mean,
                                                 AggregationMethod::FirstRankedDoc};
  /// Fraction of the training queries used for fitting during lr /
  /// aggregation selection; the rest scores the candidates.
  double inner_train_fraction = 0.8;
  /// Caps the optimisation steps of one fit (0 = no cap).
  std::size_t max_steps = 0;
  PredictorConfig predictor;
  std::uint64_t seed = 0;

  GroupingStrategy resolved_inference_strategy() const {
    return inference_strategy.value_or(default_inference_strategy(strategy));
  }
};

struct TrainLogRecord {
  std::size_t step = 0;
  double lr = 0.0;
  double loss = 0.0;
};

std::string format_train_log(const std::vector<TrainLogRecord>& log);

/// Trained predictor plus the encoder whose vectors it consumes.
struct GroupwiseModel {
  GroupwisePredictor predictor;
  std::unique_ptr<PairEncoder> encoder;
  GroupingStrategy strategy = GroupingStrategy::RQD;
  GroupingStrategy inference_strategy = GroupingStrategy::DocOrder;
  std::size_t group_size = 8;
  AggregationMethod aggregation = AggregationMethod::Mean;
  double lr = 0.0;
};

/// What a training run needs: the ranked lists to group, one label per
/// query, and the initial predictor used for query ordering.
struct TrainingSet {
  const RetrievalRun* run = nullptr;
  QueryScores labels;
  QueryScores initial_qpp;
};

struct FitResult {
  GroupwiseModel model;
  std::vector<TrainLogRecord> log;
  std::vector<double> epoch_mean_loss;
};

/// Trains one model at one learning rate. Throws NumericalError (with lr,
/// step and group id) on a non-finite loss.
FitResult fit(const TrainingSet& data, const PairEncoder& encoder_proto, const TrainConfig& cfg, double lr,
              std::uint64_t seed);

struct SelectionRecord {
  double lr = 0.0;
  AggregationMethod aggregation = AggregationMethod::Mean;
  double tau = 0.0;  // NaN when degenerate
};

struct TrainResult {
  GroupwiseModel model;
  std::vector<TrainLogRecord> log;
  std::vector<SelectionRecord> selection;
};

/// Selects lr and aggregation on an inner split of the training queries by
/// Kendall tau, then retrains on all of them with the winner.
TrainResult train(const TrainingSet& data, const PairEncoder& encoder_proto, const TrainConfig& cfg);

/// Per-document predictions (rank order) of every query in `run` within
/// depth t, grouped with the model's inference strategy.
std::map<std::string, std::vector<double>> predict_documents(const GroupwiseModel& model, const RetrievalRun& run,
                                                             std::size_t t, const QueryScores& initial_qpp = {},
                                                             std::uint64_t seed = 0);

QueryScores predict(const GroupwiseModel& model, const RetrievalRun& run, std::size_t t,
                    AggregationMethod aggregation, const QueryScores& initial_qpp = {}, std::uint64_t seed = 0);

/// One query, grouped by document order.
double predict_query(const GroupwiseModel& model, const std::string& qid, const RetrievalRun& run, std::size_t t,
                     AggregationMethod aggregation);

/// Kendall tau of predictions against labels over their common queries;
/// NaN when degenerate.
double tau_against(const QueryScores& predictions, const QueryScores& labels);

/// Writes checkpoint (`path`) and model metadata (`path + ".json"`).
void save_model(const GroupwiseModel& model, const std::string& path);
/// Encoder for a frozen-embedding model must be supplied by the caller; a
/// toy-encoder model restores its encoder from the checkpoint when texts
/// are given.
GroupwiseModel load_model(const std::string& path, std::shared_ptr<const PairEmbeddingStore> embeddings,
                          std::shared_ptr<const PairTexts> texts = nullptr);

}  // namespace gqpp
