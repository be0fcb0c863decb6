#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "gqpp/grouping.hpp"
#include "gqpp/metrics.hpp"
#include "gqpp/model.hpp"
#include "gqpp/trainer.hpp"

namespace gqpp {

/// Everything an experiment needs. Serialised as a flat `key = value` text
/// file (lists comma-separated, `#` starts a comment).
struct ExperimentConfig {
  // Inputs.
  std::string run_path;
  std::string qrels_path;
  std::string embeddings_path;
  std::string queries_path;
  std::string corpus_path;
  std::string collection_scores_path;
  std::string output_dir = "out";
  std::string encoder = "embeddings";  // embeddings | toy
  std::string dataset_profile;         // robust04 | gov2 | clueweb09b | empty

  // Methods and protocol.
  std::vector<std::string> methods = {"sigma_k", "nqc", "wig", "smv", "nsigma", "model", "model+nsigma"};
  std::size_t n_splits = 30;
  std::uint64_t seed = 0;
  std::size_t threads = 0;  // 0 = hardware concurrency

  // Labels.
  std::string label_kind = "P@10";

  // Baselines and interpolation.
  std::size_t baseline_k = 100;
  std::vector<double> x_grid = {25, 50, 75, 100};
  std::vector<double> lambda_grid = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};

  // Groupwise model.
  std::string strategy = "r+q+d";
  std::string inference_strategy = "auto";
  std::size_t group_size = 8;
  std::size_t train_depth = 100;
  std::size_t infer_depth = 25;
  std::size_t epochs = 5;
  std::vector<double> lr_grid = {1e-4, 1e-5, 1e-6};
  double warmup_fraction = 0.10;
  std::vector<std::string> aggregations = {"max", "mean", "first"};
  std::size_t max_steps = 0;
  std::size_t d_model = 16;
  std::size_t n_heads = 4;
  std::size_t n_layers = 4;
  std::size_t max_positions = 64;

  // Toy encoder and passage selection.
  std::size_t vocab_size = std::size_t{1} << 15;
  std::size_t token_dim = 16;
  std::size_t passage_window = 150;
  std::size_t passage_stride = 75;

  bool operator==(const ExperimentConfig&) const = default;

  /// Throws InputError on an invalid value or unknown method name.
  void validate() const;
};

/// Names accepted in `methods`.
const std::vector<std::string>& registered_methods();

/// Every key accepted by apply_setting, in dump order; the profile keys
/// come first.
const std::vector<std::string>& config_keys();

/// Applies one `key = value` setting. Throws InputError on unknown keys.
void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value);

/// Model profiles: desk (n=8, 4 heads), small (128), base (64), large (16).
void apply_model_profile(ExperimentConfig& cfg, const std::string& profile);

/// Dataset profiles select the supervision label: P@10 on robust04/gov2,
/// AP@1000 on clueweb09b.
void apply_dataset_profile(ExperimentConfig& cfg, const std::string& profile);

ExperimentConfig parse_config(std::string_view text, const ExperimentConfig& base = {});
ExperimentConfig load_config(const std::string& path);
std::string dump_config(const ExperimentConfig& cfg);

TrainConfig make_train_config(const ExperimentConfig& cfg);

}  // namespace gqpp
