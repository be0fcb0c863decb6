#include "gqpp/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>

#include "json.hpp"

#include "gqpp/error.hpp"
#include "gqpp/metrics.hpp"
#include "gqpp/optim.hpp"
#include "gqpp/rng.hpp"

namespace gqpp {
namespace {

// Seed streams of one fit.
enum : std::uint64_t { kPredictorInit = 10, kEncoderInit = 11, kGrouping = 12, kInnerSplit = 20, kFinalFit = 21,
                       kCandidateFit = 30 };

QueryScores default_initial_qpp(const RetrievalRun& run) {
  return evaluate_baseline(BaselineMethod::NSigmaX, contexts_from_run(run), BaselineParams{});
}

}  // namespace

std::string format_train_log(const std::vector<TrainLogRecord>& log) {
  std::string out;
  char buf[96];
  for (const auto& r : log) {
    std::snprintf(buf, sizeof buf, "%zu %.9g %.17g\n", r.step, r.lr, r.loss);
    out += buf;
  }
  return out;
}

FitResult fit(const TrainingSet& data, const PairEncoder& encoder_proto, const TrainConfig& cfg, double lr,
              std::uint64_t seed) {
  if (!data.run || data.run->num_queries() == 0) throw InputError("fit: no training queries");
  if (cfg.epochs == 0 || cfg.group_size == 0 || cfg.train_depth == 0) throw ContractError("fit: epochs, group size and depth must be positive");
  if (!(lr > 0.0)) throw ContractError("fit: learning rate must be positive");
  if (cfg.predictor.max_positions < cfg.group_size)
    throw ContractError("fit: max_positions " + std::to_string(cfg.predictor.max_positions) + " < group size " +
                        std::to_string(cfg.group_size));
  const RetrievalRun& run = *data.run;
  for (const auto& qid : run.qids())
    if (!data.labels.count(qid)) throw InputError("fit: no label for training query '" + qid + "'");

  auto encoder = encoder_proto.fresh(derive_seed(seed, kEncoderInit));
  encoder->check_covers(run, cfg.train_depth);
  if (encoder->dim() != cfg.predictor.d_model)
    throw ContractError("fit: encoder dimension " + std::to_string(encoder->dim()) + " != d_model " +
                        std::to_string(cfg.predictor.d_model));
  GroupwisePredictor predictor(cfg.predictor, derive_seed(seed, kPredictorInit));

  const bool needs_qpp = cfg.strategy == GroupingStrategy::QueryOrder || cfg.strategy == GroupingStrategy::QueryPlusDoc ||
                         cfg.strategy == GroupingStrategy::RQD;
  const QueryScores initial = needs_qpp && data.initial_qpp.empty() ? default_initial_qpp(run) : data.initial_qpp;
  const std::uint64_t group_seed = derive_seed(seed, kGrouping);

  ad::ParameterSet all;
  all.extend(predictor.params());
  if (auto* enc = encoder->trainable()) all.extend(*enc);

  std::size_t per_epoch = build_groups(cfg.strategy, run, cfg.train_depth, cfg.group_size, group_seed, initial, 0).size();
  std::size_t total = per_epoch * cfg.epochs;
  if (cfg.max_steps > 0) total = std::min(total, cfg.max_steps);
  auto opt = ad::make_optimizer_state(all, lr, total, cfg.warmup_fraction);

  FitResult result{GroupwiseModel{std::move(predictor), nullptr}, {}, {}};
  GroupwisePredictor& model = result.model.predictor;
  for (std::size_t epoch = 0; epoch < cfg.epochs && opt.t < total; ++epoch) {
    auto groups = build_groups(cfg.strategy, run, cfg.train_depth, cfg.group_size, group_seed, initial, epoch);
    double loss_sum = 0.0;
    std::size_t loss_count = 0;
    for (std::size_t g = 0; g < groups.size() && opt.t < total; ++g) {
      const Group& group = groups[g];
      std::vector<double> labels(group.size(), 0.0);
      for (std::size_t i = 0; i < group.size(); ++i)
        if (group.mask[i]) labels[i] = data.labels.at(group.items[i].qid);
      all.zero_grad();
      ad::Tape tape;
      ad::Tensor x = encoder->encode_group(tape, group);
      ad::Tensor out = model.forward(tape, x, group.position_ids, group.mask);
      ad::Tensor loss = mse_loss(tape, out, labels, group.mask);
      const double value = loss.item();
      if (!std::isfinite(value)) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "non-finite training loss (lr=%g, step=%zu, epoch=%zu, group=%zu)", lr,
                      opt.t + 1, epoch, g);
        throw NumericalError(buf);
      }
      tape.backward(loss);
      const double step_lr = ad::scheduled_lr(opt, opt.t + 1);
      ad::adam_step(opt, all);
      result.log.push_back({opt.t, step_lr, value});
      loss_sum += value;
      ++loss_count;
    }
    if (loss_count) result.epoch_mean_loss.push_back(loss_sum / static_cast<double>(loss_count));
  }
  result.model.encoder = std::move(encoder);
  result.model.strategy = cfg.strategy;
  result.model.inference_strategy = cfg.resolved_inference_strategy();
  result.model.group_size = cfg.group_size;
  result.model.aggregation = cfg.aggregations.empty() ? AggregationMethod::Mean : cfg.aggregations.front();
  result.model.lr = lr;
  return result;
}

double tau_against(const QueryScores& predictions, const QueryScores& labels) {
  std::vector<double> x, y;
  for (const auto& [qid, p] : predictions) {
    auto it = labels.find(qid);
    if (it == labels.end()) continue;
    x.push_back(p);
    y.push_back(it->second);
  }
  if (x.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  try {
    return kendall_tau_b(x, y);
  } catch (const DegenerateError&) {
    return std::numeric_limits<double>::quiet_NaN();
  }
}

TrainResult train(const TrainingSet& data, const PairEncoder& encoder_proto, const TrainConfig& cfg) {
  if (!data.run) throw InputError("train: no run");
  if (cfg.lr_grid.empty()) throw ContractError("train: empty learning-rate grid");
  if (cfg.aggregations.empty()) throw ContractError("train: no aggregation candidates");
  TrainResult result{GroupwiseModel{GroupwisePredictor(cfg.predictor, 0), nullptr}, {}, {}};
  double best_lr = cfg.lr_grid.front();
  AggregationMethod best_agg = cfg.aggregations.front();

  if (cfg.lr_grid.size() > 1 || cfg.aggregations.size() > 1) {
    auto qids = data.run->qids();
    Rng rng(derive_seed(cfg.seed, kInnerSplit));
    rng.shuffle(std::span<std::string>(qids));
    std::vector<std::string> inner_train, inner_valid;
    if (qids.size() >= 4) {
      auto n_fit = static_cast<std::size_t>(std::ceil(cfg.inner_train_fraction * static_cast<double>(qids.size())));
      n_fit = std::clamp<std::size_t>(n_fit, 1, qids.size() - 2);
      inner_train.assign(qids.begin(), qids.begin() + static_cast<std::ptrdiff_t>(n_fit));
      inner_valid.assign(qids.begin() + static_cast<std::ptrdiff_t>(n_fit), qids.end());
    } else {
      // Too few queries to hold any out: score candidates on the training set.
      inner_train = qids;
      inner_valid = qids;
    }
    const RetrievalRun fit_run = data.run->subset(inner_train);
    const RetrievalRun valid_run = data.run->subset(inner_valid);
    TrainingSet inner{&fit_run, data.labels, data.initial_qpp};
    double best_tau = -std::numeric_limits<double>::infinity();
    for (std::size_t li = 0; li < cfg.lr_grid.size(); ++li) {
      auto candidate = fit(inner, encoder_proto, cfg, cfg.lr_grid[li], derive_seed(cfg.seed, kCandidateFit, li));
      auto per_doc = predict_documents(candidate.model, valid_run, cfg.infer_depth, data.initial_qpp,
                                       derive_seed(cfg.seed, kCandidateFit, li));
      for (auto agg : cfg.aggregations) {
        QueryScores scores;
        for (const auto& [qid, preds] : per_doc) scores[qid] = aggregate(preds, agg);
        const double tau = tau_against(scores, data.labels);
        result.selection.push_back({cfg.lr_grid[li], agg, tau});
        if (!std::isnan(tau) && tau > best_tau) {
          best_tau = tau;
          best_lr = cfg.lr_grid[li];
          best_agg = agg;
        }
      }
    }
  }
  auto final_fit = fit(data, encoder_proto, cfg, best_lr, derive_seed(cfg.seed, kFinalFit));
  result.model = std::move(final_fit.model);
  result.model.aggregation = best_agg;
  result.log = std::move(final_fit.log);
  return result;
}

std::map<std::string, std::vector<double>> predict_documents(const GroupwiseModel& model, const RetrievalRun& run,
                                                             std::size_t t, const QueryScores& initial_qpp,
                                                             std::uint64_t seed) {
  if (t < 1) throw ContractError("predict: t must be >= 1");
  if (!model.encoder) throw ContractError("predict: model has no encoder");
  model.encoder->check_covers(run, t);
  const QueryScores initial =
      model.inference_strategy == GroupingStrategy::QueryOrder && initial_qpp.empty() ? default_initial_qpp(run)
                                                                                      : initial_qpp;
  auto groups = build_groups(model.inference_strategy, run, t, model.group_size, seed, initial, 0);
  std::map<std::pair<std::string, std::string>, double> by_pair;
  for (const auto& group : groups) {
    ad::Tape tape(false);
    ad::Tensor x = model.encoder->encode_group(tape, group);
    ad::Tensor out = model.predictor.forward(tape, x, group.position_ids, group.mask);
    for (std::size_t i = 0; i < group.size(); ++i)
      if (group.mask[i]) by_pair[{group.items[i].qid, group.items[i].docid}] = out.data()[i];
  }
  std::map<std::string, std::vector<double>> out;
  for (const auto& [qid, entries] : run.lists()) {
    auto& preds = out[qid];
    for (std::size_t i = 0; i < std::min(t, entries.size()); ++i) preds.push_back(by_pair.at({qid, entries[i].docid}));
  }
  return out;
}

QueryScores predict(const GroupwiseModel& model, const RetrievalRun& run, std::size_t t, AggregationMethod aggregation,
                    const QueryScores& initial_qpp, std::uint64_t seed) {
  QueryScores out;
  for (const auto& [qid, preds] : predict_documents(model, run, t, initial_qpp, seed))
    if (!preds.empty()) out[qid] = aggregate(preds, aggregation);
  return out;
}

double predict_query(const GroupwiseModel& model, const std::string& qid, const RetrievalRun& run, std::size_t t,
                     AggregationMethod aggregation) {
  if (run.at(qid).empty()) throw InputError("query '" + qid + "' has no retrieved documents");
  const RetrievalRun one = run.subset({qid});
  auto groups = build_groups(GroupingStrategy::DocOrder, one, t, model.group_size, 0);
  std::vector<double> preds;
  for (const auto& group : groups) {
    ad::Tape tape(false);
    ad::Tensor x = model.encoder->encode_group(tape, group);
    ad::Tensor out = model.predictor.forward(tape, x, group.position_ids, group.mask);
    for (std::size_t i = 0; i < group.size(); ++i)
      if (group.mask[i]) preds.push_back(out.data()[i]);
  }
  // DocOrder groups are emitted shuffled; restore rank order.
  std::vector<std::pair<int, double>> ranked;
  std::size_t k = 0;
  for (const auto& group : groups)
    for (std::size_t i = 0; i < group.size(); ++i)
      if (group.mask[i]) ranked.emplace_back(group.items[i].rank, preds[k++]);
  std::sort(ranked.begin(), ranked.end());
  std::vector<double> ordered;
  for (const auto& r : ranked) ordered.push_back(r.second);
  return aggregate(ordered, aggregation);
}

void save_model(const GroupwiseModel& model, const std::string& path) {
  ad::ParameterSet all;
  all.extend(model.predictor.params());
  nlohmann::json meta;
  const auto& pc = model.predictor.config();
  meta["d_model"] = pc.d_model;
  meta["n_heads"] = pc.n_heads;
  meta["n_layers"] = pc.n_layers;
  meta["ffn_multiplier"] = pc.ffn_multiplier;
  meta["max_positions"] = pc.max_positions;
  meta["strategy"] = strategy_name(model.strategy);
  meta["inference_strategy"] = strategy_name(model.inference_strategy);
  meta["group_size"] = model.group_size;
  meta["aggregation"] = aggregation_name(model.aggregation);
  meta["lr"] = model.lr;
  if (const auto* toy = dynamic_cast<const ToyPairEncoder*>(model.encoder.get())) {
    const auto& ec = toy->encoder().config();
    meta["encoder"] = "toy";
    meta["vocab_size"] = ec.vocab_size;
    meta["token_dim"] = ec.token_dim;
    meta["max_pair_tokens"] = ec.max_pair_tokens;
    all.extend(toy->encoder().params());
  } else {
    meta["encoder"] = "embeddings";
  }
  ad::save_checkpoint(all, path);
  write_text_file(path + ".json", meta.dump(2) + "\n");
}

GroupwiseModel load_model(const std::string& path, std::shared_ptr<const PairEmbeddingStore> embeddings,
                          std::shared_ptr<const PairTexts> texts) {
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(read_text_file(path + ".json"));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad model metadata: ") + e.what());
  }
  auto all = ad::load_checkpoint(path);
  ad::ParameterSet predictor_params, encoder_params;
  for (const auto& [name, t] : all.entries())
    (name.rfind("encoder.", 0) == 0 ? encoder_params : predictor_params).add(name, t);
  try {
    PredictorConfig pc;
    pc.d_model = meta.at("d_model");
    pc.n_heads = meta.at("n_heads");
    pc.n_layers = meta.at("n_layers");
    pc.ffn_multiplier = meta.at("ffn_multiplier");
    pc.max_positions = meta.at("max_positions");
    GroupwiseModel model{GroupwisePredictor(pc, std::move(predictor_params)), nullptr};
    model.strategy = parse_strategy(meta.at("strategy"));
    model.inference_strategy = parse_strategy(meta.at("inference_strategy"));
    model.group_size = meta.at("group_size");
    model.aggregation = parse_aggregation(meta.at("aggregation"));
    model.lr = meta.at("lr");
    if (meta.at("encoder") == "toy") {
      if (!texts) throw InputError("model uses the toy encoder: pair texts (queries + corpus) are required");
      ToyEncoderConfig ec;
      ec.vocab_size = meta.at("vocab_size");
      ec.token_dim = meta.at("token_dim");
      ec.output_dim = pc.d_model;
      ec.max_pair_tokens = meta.at("max_pair_tokens");
      model.encoder = std::make_unique<ToyPairEncoder>(std::move(texts), ToyEncoder(ec, std::move(encoder_params)));
    } else {
      if (!embeddings) throw InputError("model consumes imported embeddings: an embedding file is required");
      if (embeddings->dim() != pc.d_model)
        throw InputError("embedding dimension " + std::to_string(embeddings->dim()) + " != model d_model " +
                         std::to_string(pc.d_model));
      model.encoder = std::make_unique<EmbeddingPairEncoder>(std::move(embeddings));
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad model metadata: ") + e.what());
  }
}

}  // namespace gqpp
