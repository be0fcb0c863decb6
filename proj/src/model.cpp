#include "gqpp/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "gqpp/error.hpp"
#include "gqpp/log.hpp"
#include "gqpp/rng.hpp"

namespace gqpp {

using ad::Tape;
using ad::Tensor;

namespace {

Tensor uniform_param(Rng& rng, std::size_t rows, std::size_t cols, std::size_t fan_in) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::vector<double> v(rows * cols);
  for (auto& x : v) x = rng.uniform(-bound, bound);
  return Tensor::from(rows, cols, std::move(v), true);
}

Tensor constant_param(std::size_t rows, std::size_t cols, double value) {
  return Tensor::from(rows, cols, std::vector<double>(rows * cols, value), true);
}

std::vector<double> row_mask_values(const Group& group, std::size_t d) {
  std::vector<double> m(group.size() * d, 0.0);
  for (std::size_t i = 0; i < group.size(); ++i)
    if (group.mask[i]) std::fill_n(m.begin() + static_cast<std::ptrdiff_t>(i * d), d, 1.0);
  return m;
}

}  // namespace

// --- EmbeddingPairEncoder ---------------------------------------------------

EmbeddingPairEncoder::EmbeddingPairEncoder(std::shared_ptr<const PairEmbeddingStore> store) : store_(std::move(store)) {
  if (!store_) throw ContractError("EmbeddingPairEncoder: null store");
}

Tensor EmbeddingPairEncoder::encode_group(Tape&, const Group& group) const {
  const std::size_t d = dim();
  std::vector<double> values(group.size() * d, 0.0);
  for (std::size_t i = 0; i < group.size(); ++i) {
    if (!group.mask[i]) continue;
    const auto& rec = store_->at(group.items[i].qid, group.items[i].docid);
    std::copy(rec.vec.begin(), rec.vec.end(), values.begin() + static_cast<std::ptrdiff_t>(i * d));
  }
  return Tensor::from(group.size(), d, std::move(values));
}

std::unique_ptr<PairEncoder> EmbeddingPairEncoder::fresh(std::uint64_t) const {
  return std::make_unique<EmbeddingPairEncoder>(store_);
}

void EmbeddingPairEncoder::check_covers(const RetrievalRun& run, std::size_t depth) const {
  for (const auto& [qid, entries] : run.lists())
    for (std::size_t i = 0; i < std::min(depth, entries.size()); ++i)
      if (!store_->find(qid, entries[i].docid))
        throw InputError("missing embedding for (" + qid + ", " + entries[i].docid + ")");
}

// --- Toy encoder ------------------------------------------------------------

PairTexts build_pair_texts(const std::vector<QueryRecord>& queries, const std::vector<DocRecord>& corpus,
                           const RetrievalRun& run, std::size_t depth, std::size_t window, std::size_t stride,
                           const PassageScorer& scorer) {
  std::unordered_map<std::string, const QueryRecord*> qmap;
  for (const auto& q : queries) qmap.emplace(q.qid, &q);
  std::unordered_map<std::string, const DocRecord*> dmap;
  for (const auto& d : corpus) dmap.emplace(d.docid, &d);
  PairTexts out;
  std::size_t missing = 0;
  for (const auto& [qid, entries] : run.lists()) {
    auto q = qmap.find(qid);
    if (q == qmap.end()) throw InputError("no text for query '" + qid + "'");
    for (std::size_t i = 0; i < std::min(depth, entries.size()); ++i) {
      auto d = dmap.find(entries[i].docid);
      if (d == dmap.end() || d->second->text.empty()) {
        ++missing;
        continue;
      }
      auto passages = slice_passages(d->second->text, window, stride);
      auto best = select_top_passage(*q->second, passages, scorer);
      out.emplace(std::make_pair(qid, entries[i].docid), std::make_pair(q->second->text, std::move(passages[best].tokens)));
    }
  }
  if (missing) warn(std::to_string(missing) + " retrieved documents have no text in the corpus");
  return out;
}

ToyEncoder::ToyEncoder(ToyEncoderConfig cfg, std::uint64_t seed) : cfg_(cfg) {
  if (cfg_.vocab_size == 0 || cfg_.token_dim == 0 || cfg_.output_dim == 0 || cfg_.max_pair_tokens < 2)
    throw ContractError("ToyEncoder: invalid configuration");
  Rng rng(seed);
  params_.add("encoder.token_embedding", uniform_param(rng, cfg_.vocab_size, cfg_.token_dim, cfg_.token_dim));
  params_.add("encoder.proj.weight", uniform_param(rng, 2 * cfg_.token_dim, cfg_.output_dim, 2 * cfg_.token_dim));
  params_.add("encoder.proj.bias", uniform_param(rng, 1, cfg_.output_dim, 2 * cfg_.token_dim));
}

ToyEncoder::ToyEncoder(ToyEncoderConfig cfg, ad::ParameterSet params) : cfg_(cfg), params_(std::move(params)) {
  const auto& table = params_.get("encoder.token_embedding");
  if (table.rows() != cfg_.vocab_size || table.cols() != cfg_.token_dim)
    throw FormatError("toy encoder embedding table does not match its configuration");
  if (params_.get("encoder.proj.weight").cols() != cfg_.output_dim)
    throw FormatError("toy encoder projection does not match its configuration");
}

std::size_t ToyEncoder::token_id(const std::string& token) const {
  return static_cast<std::size_t>(fnv1a64(token) % cfg_.vocab_size);
}

Tensor ToyEncoder::encode(Tape& tape, const Tokens& query, const Tokens& doc) const {
  if (query.empty()) throw InputError("toy encoder: empty query");
  const std::size_t qlen = std::min(query.size(), cfg_.max_pair_tokens - 1);
  const std::size_t dlen = std::min(doc.size(), cfg_.max_pair_tokens - qlen);
  if (dlen == 0) throw InputError("toy encoder: empty document after truncation");
  std::vector<std::size_t> qids(qlen), dids(dlen);
  for (std::size_t i = 0; i < qlen; ++i) qids[i] = token_id(query[i]);
  for (std::size_t i = 0; i < dlen; ++i) dids[i] = token_id(doc[i]);
  const auto& table = params_.get("encoder.token_embedding");
  Tensor q = ad::mean_rows(tape, ad::gather_rows(tape, table, qids));
  Tensor d = ad::mean_rows(tape, ad::gather_rows(tape, table, dids));
  Tensor joint = ad::concat_cols(tape, {q, d});
  return ad::add_bias(tape, ad::matmul(tape, joint, params_.get("encoder.proj.weight")),
                      params_.get("encoder.proj.bias"));
}

std::vector<float> ToyEncoder::encode_values(const Tokens& query, const Tokens& doc) const {
  Tape tape(false);
  Tensor t = encode(tape, query, doc);
  return std::vector<float>(t.data().begin(), t.data().end());
}

ToyPairEncoder::ToyPairEncoder(std::shared_ptr<const PairTexts> texts, ToyEncoderConfig cfg, std::uint64_t seed)
    : texts_(std::move(texts)), encoder_(cfg, seed) {}

ToyPairEncoder::ToyPairEncoder(std::shared_ptr<const PairTexts> texts, ToyEncoder encoder)
    : texts_(std::move(texts)), encoder_(std::move(encoder)) {}

Tensor ToyPairEncoder::encode_group(Tape& tape, const Group& group) const {
  const std::size_t d = dim();
  std::vector<Tensor> rows;
  for (std::size_t i = 0; i < group.size(); ++i) {
    if (!group.mask[i]) {
      rows.push_back(Tensor::zeros(1, d));
      continue;
    }
    auto it = texts_->find({group.items[i].qid, group.items[i].docid});
    if (it == texts_->end())
      throw InputError("no text for pair (" + group.items[i].qid + ", " + group.items[i].docid + ")");
    rows.push_back(encoder_.encode(tape, it->second.first, it->second.second));
  }
  Tensor stacked = ad::concat_rows(tape, rows);
  return ad::mul(tape, stacked, Tensor::from(group.size(), d, row_mask_values(group, d)));
}

std::unique_ptr<PairEncoder> ToyPairEncoder::fresh(std::uint64_t seed) const {
  return std::make_unique<ToyPairEncoder>(texts_, encoder_.config(), seed);
}

void ToyPairEncoder::check_covers(const RetrievalRun& run, std::size_t depth) const {
  for (const auto& [qid, entries] : run.lists())
    for (std::size_t i = 0; i < std::min(depth, entries.size()); ++i)
      if (!texts_->count({qid, entries[i].docid}))
        throw InputError("no text for pair (" + qid + ", " + entries[i].docid + ")");
}

PairEmbeddingStore embed_pairs(const ToyEncoder& encoder, const PairTexts& texts, const RetrievalRun& run,
                               std::size_t depth) {
  PairEmbeddingStore store(static_cast<std::uint32_t>(encoder.config().output_dim), "toy");
  for (const auto& [qid, entries] : run.lists())
    for (std::size_t i = 0; i < std::min(depth, entries.size()); ++i) {
      auto it = texts.find({qid, entries[i].docid});
      if (it == texts.end()) continue;
      store.add({qid, entries[i].docid, static_cast<std::uint32_t>(entries[i].rank),
                 encoder.encode_values(it->second.first, it->second.second)});
    }
  return store;
}

// --- Groupwise predictor ----------------------------------------------------

void PredictorConfig::validate() const {
  if (d_model == 0 || n_heads == 0 || n_layers == 0 || ffn_multiplier == 0 || max_positions == 0)
    throw ContractError("predictor configuration values must be positive");
  if (d_model % n_heads != 0)
    throw ContractError("d_model " + std::to_string(d_model) + " is not divisible by " + std::to_string(n_heads) + " heads");
}

GroupwisePredictor::GroupwisePredictor(PredictorConfig cfg, std::uint64_t seed) : cfg_(cfg) {
  cfg_.validate();
  Rng rng(seed);
  const std::size_t d = cfg_.d_model, f = cfg_.ffn_multiplier * d;
  params_.add("pos_embedding", uniform_param(rng, cfg_.max_positions, d, d));
  for (std::size_t l = 0; l < cfg_.n_layers; ++l) {
    const std::string p = "layer" + std::to_string(l) + ".";
    // No key bias: it shifts every logit of a row equally and has no effect.
    params_.add(p + "attn.wq", uniform_param(rng, d, d, d));
    params_.add(p + "attn.bq", uniform_param(rng, 1, d, d));
    params_.add(p + "attn.wk", uniform_param(rng, d, d, d));
    params_.add(p + "attn.wv", uniform_param(rng, d, d, d));
    params_.add(p + "attn.bv", uniform_param(rng, 1, d, d));
    params_.add(p + "attn.wo", uniform_param(rng, d, d, d));
    params_.add(p + "attn.bo", uniform_param(rng, 1, d, d));
    params_.add(p + "ln1.gain", constant_param(1, d, 1.0));
    params_.add(p + "ln1.bias", constant_param(1, d, 0.0));
    params_.add(p + "ffn.w1", uniform_param(rng, d, f, d));
    params_.add(p + "ffn.b1", uniform_param(rng, 1, f, d));
    params_.add(p + "ffn.w2", uniform_param(rng, f, d, f));
    params_.add(p + "ffn.b2", uniform_param(rng, 1, d, f));
    params_.add(p + "ln2.gain", constant_param(1, d, 1.0));
    params_.add(p + "ln2.bias", constant_param(1, d, 0.0));
  }
  params_.add("head.weight", uniform_param(rng, d, 1, d));
  params_.add("head.bias", uniform_param(rng, 1, 1, d));
}

GroupwisePredictor::GroupwisePredictor(PredictorConfig cfg, ad::ParameterSet params)
    : cfg_(cfg), params_(std::move(params)) {
  cfg_.validate();
  const auto& pos = params_.get("pos_embedding");
  if (pos.rows() != cfg_.max_positions || pos.cols() != cfg_.d_model)
    throw FormatError("position embedding does not match the predictor configuration");
  for (std::size_t l = 0; l < cfg_.n_layers; ++l) params_.get("layer" + std::to_string(l) + ".attn.wq");
}

Tensor GroupwisePredictor::forward(Tape& tape, const Tensor& x_in, std::span<const int> position_ids,
                                   std::span<const std::uint8_t> mask) const {
  const std::size_t n = x_in.rows(), d = cfg_.d_model;
  if (x_in.shape().size() != 2 || x_in.cols() != d)
    throw ShapeError("forward: group matrix " + ad::shape_string(x_in.shape()) + " does not have " +
                     std::to_string(d) + " columns");
  if (position_ids.size() != n || mask.size() != n)
    throw ShapeError("forward: " + std::to_string(position_ids.size()) + " position ids and " +
                     std::to_string(mask.size()) + " mask entries for a group of " + std::to_string(n));
  std::vector<std::size_t> pos(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (position_ids[i] < 0 || static_cast<std::size_t>(position_ids[i]) >= cfg_.max_positions)
      throw ContractError("forward: position id " + std::to_string(position_ids[i]) + " outside [0, " +
                          std::to_string(cfg_.max_positions) + ")");
    pos[i] = static_cast<std::size_t>(position_ids[i]);
  }
  if (std::find(mask.begin(), mask.end(), std::uint8_t{1}) == mask.end())
    throw ContractError("forward: group has no valid slot");

  const std::size_t heads = cfg_.n_heads, dh = d / heads;
  const double inv_sqrt_dh = 1.0 / std::sqrt(static_cast<double>(dh));
  auto P = [&](const std::string& name) -> const Tensor& { return params_.get(name); };

  Tensor x = ad::add(tape, x_in, ad::gather_rows(tape, P("pos_embedding"), pos));
  for (std::size_t l = 0; l < cfg_.n_layers; ++l) {
    const std::string p = "layer" + std::to_string(l) + ".";
    Tensor q = ad::add_bias(tape, ad::matmul(tape, x, P(p + "attn.wq")), P(p + "attn.bq"));
    Tensor k = ad::matmul(tape, x, P(p + "attn.wk"));
    Tensor v = ad::add_bias(tape, ad::matmul(tape, x, P(p + "attn.wv")), P(p + "attn.bv"));
    std::vector<Tensor> head_out;
    for (std::size_t h = 0; h < heads; ++h) {
      Tensor qh = ad::slice_cols(tape, q, h * dh, dh);
      Tensor kh = ad::slice_cols(tape, k, h * dh, dh);
      Tensor vh = ad::slice_cols(tape, v, h * dh, dh);
      Tensor scores = ad::scale(tape, ad::matmul(tape, qh, ad::transpose(tape, kh)), inv_sqrt_dh);
      Tensor attn = ad::softmax_rows(tape, scores, mask);
      head_out.push_back(ad::matmul(tape, attn, vh));
    }
    Tensor ctx = heads == 1 ? head_out[0] : ad::concat_cols(tape, head_out);
    Tensor attn_out = ad::add_bias(tape, ad::matmul(tape, ctx, P(p + "attn.wo")), P(p + "attn.bo"));
    x = ad::layer_norm(tape, ad::add(tape, x, attn_out), P(p + "ln1.gain"), P(p + "ln1.bias"));
    Tensor hidden = ad::gelu(tape, ad::add_bias(tape, ad::matmul(tape, x, P(p + "ffn.w1")), P(p + "ffn.b1")));
    Tensor ffn = ad::add_bias(tape, ad::matmul(tape, hidden, P(p + "ffn.w2")), P(p + "ffn.b2"));
    x = ad::layer_norm(tape, ad::add(tape, x, ffn), P(p + "ln2.gain"), P(p + "ln2.bias"));
  }
  return ad::add_bias(tape, ad::matmul(tape, x, P("head.weight")), P("head.bias"));
}

Tensor mse_loss(Tape& tape, const Tensor& predictions, std::span<const double> labels,
                std::span<const std::uint8_t> mask) {
  if (predictions.size() != labels.size() || labels.size() != mask.size())
    throw ShapeError("mse_loss: " + std::to_string(predictions.size()) + " predictions, " +
                     std::to_string(labels.size()) + " labels, " + std::to_string(mask.size()) + " mask entries");
  const auto valid = static_cast<double>(std::count(mask.begin(), mask.end(), std::uint8_t{1}));
  if (valid == 0) throw ContractError("mse_loss: no valid slot");
  std::vector<double> target(labels.size()), weights(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    target[i] = mask[i] ? labels[i] : 0.0;
    weights[i] = mask[i] ? 1.0 / valid : 0.0;
  }
  Tensor diff = ad::sub(tape, predictions, Tensor::from(predictions.rows(), predictions.cols(), std::move(target)));
  return ad::weighted_sum(tape, ad::mul(tape, diff, diff), weights);
}

std::string aggregation_name(AggregationMethod m) {
  switch (m) {
    case AggregationMethod::Max: return "max";
    case AggregationMethod::Mean: return "mean";
    case AggregationMethod::FirstRankedDoc: return "first";
  }
  return "?";
}

AggregationMethod parse_aggregation(const std::string& name) {
  if (name == "max") return AggregationMethod::Max;
  if (name == "mean" || name == "avg") return AggregationMethod::Mean;
  if (name == "first" || name == "first-ranked") return AggregationMethod::FirstRankedDoc;
  throw InputError("unknown aggregation '" + name + "' (max, mean, first)");
}

const std::vector<AggregationMethod>& all_aggregations() {
  static const std::vector<AggregationMethod> all = {AggregationMethod::Max, AggregationMethod::Mean,
                                                     AggregationMethod::FirstRankedDoc};
  return all;
}

double aggregate(std::span<const double> preds, AggregationMethod method) {
  if (preds.empty()) throw ContractError("aggregate: no predictions");
  switch (method) {
    case AggregationMethod::Max: return *std::max_element(preds.begin(), preds.end());
    case AggregationMethod::Mean: return std::accumulate(preds.begin(), preds.end(), 0.0) / static_cast<double>(preds.size());
    case AggregationMethod::FirstRankedDoc: return preds.front();
  }
  throw ContractError("unknown aggregation");
}

}  // namespace gqpp
