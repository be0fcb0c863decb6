#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gqpp/autodiff.hpp"
#include "gqpp/data_model.hpp"
#include "gqpp/embeddings.hpp"
#include "gqpp/grouping.hpp"

namespace gqpp {

// ---------------------------------------------------------------------------
// Pair encoders: turn the (query, document) pairs of a group into an n x d
// matrix. Padded slots always encode to zero rows.

class PairEncoder {
 public:
  virtual ~PairEncoder() = default;
  virtual std::string name() const = 0;
  virtual std::size_t dim() const = 0;
  virtual ad::Tensor encode_group(ad::Tape& tape, const Group& group) const = 0;
  /// Parameters updated during training; nullptr for a frozen encoder.
  virtual ad::ParameterSet* trainable() { return nullptr; }
  /// Independent copy with freshly initialised trainable parameters.
  virtual std::unique_ptr<PairEncoder> fresh(std::uint64_t seed) const = 0;
  /// Throws InputError if some pair within depth cannot be encoded.
  virtual void check_covers(const RetrievalRun& run, std::size_t depth) const = 0;
};

/// Frozen vectors imported from an embedding store.
class EmbeddingPairEncoder final : public PairEncoder {
 public:
  explicit EmbeddingPairEncoder(std::shared_ptr<const PairEmbeddingStore> store);

  std::string name() const override { return "embeddings:" + store_->encoder_name(); }
  std::size_t dim() const override { return store_->dim(); }
  ad::Tensor encode_group(ad::Tape& tape, const Group& group) const override;
  std::unique_ptr<PairEncoder> fresh(std::uint64_t) const override;
  void check_covers(const RetrievalRun& run, std::size_t depth) const override;

 private:
  std::shared_ptr<const PairEmbeddingStore> store_;
};

struct ToyEncoderConfig {
  std::size_t vocab_size = std::size_t{1} << 15;
  std::size_t token_dim = 16;
  std::size_t output_dim = 16;
  std::size_t max_pair_tokens = 256;
};

/// Query tokens and top-passage tokens of every (qid, docid) pair.
using PairTexts = std::map<std::pair<std::string, std::string>, std::pair<Tokens, Tokens>>;

/// Selects the top passage of every judged pair within depth.
PairTexts build_pair_texts(const std::vector<QueryRecord>& queries, const std::vector<DocRecord>& corpus,
                           const RetrievalRun& run, std::size_t depth, std::size_t window = 150,
                           std::size_t stride = 75, const PassageScorer& scorer = lexical_overlap_score);

/// Trainable surrogate of a cross-encoder: mean query-token embedding and
/// mean document-token embedding, concatenated and projected to d.
class ToyEncoder {
 public:
  ToyEncoder(ToyEncoderConfig cfg, std::uint64_t seed);
  ToyEncoder(ToyEncoderConfig cfg, ad::ParameterSet params);

  const ToyEncoderConfig& config() const { return cfg_; }
  ad::ParameterSet& params() { return params_; }
  const ad::ParameterSet& params() const { return params_; }

  std::size_t token_id(const std::string& token) const;
  /// 1 x d encoding. The document is truncated to max_pair_tokens - |q|.
  ad::Tensor encode(ad::Tape& tape, const Tokens& query, const Tokens& doc) const;
  std::vector<float> encode_values(const Tokens& query, const Tokens& doc) const;

 private:
  ToyEncoderConfig cfg_;
  ad::ParameterSet params_;
};

class ToyPairEncoder final : public PairEncoder {
 public:
  ToyPairEncoder(std::shared_ptr<const PairTexts> texts, ToyEncoderConfig cfg, std::uint64_t seed);
  ToyPairEncoder(std::shared_ptr<const PairTexts> texts, ToyEncoder encoder);

  std::string name() const override { return "toy"; }
  std::size_t dim() const override { return encoder_.config().output_dim; }
  ad::Tensor encode_group(ad::Tape& tape, const Group& group) const override;
  ad::ParameterSet* trainable() override { return &encoder_.params(); }
  std::unique_ptr<PairEncoder> fresh(std::uint64_t seed) const override;
  void check_covers(const RetrievalRun& run, std::size_t depth) const override;

  const ToyEncoder& encoder() const { return encoder_; }

 private:
  std::shared_ptr<const PairTexts> texts_;
  ToyEncoder encoder_;
};

/// Writes toy-encoder vectors of every pair within depth into a store.
PairEmbeddingStore embed_pairs(const ToyEncoder& encoder, const PairTexts& texts, const RetrievalRun& run,
                               std::size_t depth);

// ---------------------------------------------------------------------------
// Groupwise predictor.

struct PredictorConfig {
  std::size_t d_model = 16;
  std::size_t n_heads = 4;
  std::size_t n_layers = 4;
  std::size_t ffn_multiplier = 4;
  std::size_t max_positions = 64;

  void validate() const;
  bool operator==(const PredictorConfig&) const = default;
};

/// Learned position embeddings, post-norm self-attention encoder layers and
/// a linear head producing one score per slot.
class GroupwisePredictor {
 public:
  GroupwisePredictor(PredictorConfig cfg, std::uint64_t seed);
  GroupwisePredictor(PredictorConfig cfg, ad::ParameterSet params);

  const PredictorConfig& config() const { return cfg_; }
  ad::ParameterSet& params() { return params_; }
  const ad::ParameterSet& params() const { return params_; }

  /// group_vectors: n x d_model. Returns n x 1; masked slots neither attend
  /// nor are attended to, and their outputs are meaningless.
  ad::Tensor forward(ad::Tape& tape, const ad::Tensor& group_vectors, std::span<const int> position_ids,
                     std::span<const std::uint8_t> mask) const;

 private:
  PredictorConfig cfg_;
  ad::ParameterSet params_;
};

/// Mean squared error over the valid slots.
ad::Tensor mse_loss(ad::Tape& tape, const ad::Tensor& predictions, std::span<const double> labels,
                    std::span<const std::uint8_t> mask);

enum class AggregationMethod { Max, Mean, FirstRankedDoc };

std::string aggregation_name(AggregationMethod m);
AggregationMethod parse_aggregation(const std::string& name);
const std::vector<AggregationMethod>& all_aggregations();

/// Combines per-document predictions given in rank order.
double aggregate(std::span<const double> predictions_by_rank, AggregationMethod method);

}  // namespace gqpp
