#include "gqpp/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <sstream>

#include "gqpp/baselines.hpp"
#include "gqpp/error.hpp"

namespace gqpp {
namespace {

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  std::string out(s.substr(b, e - b + 1));
  if (out.size() >= 2 && out.front() == '"' && out.back() == '"') out = out.substr(1, out.size() - 2);
  return out;
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(value);
  while (std::getline(in, item, ',')) {
    auto t = trim(item);
    if (!t.empty()) out.push_back(t);
  }
  return out;
}

std::size_t to_size(const std::string& key, const std::string& v) {
  std::size_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) throw InputError("config '" + key + "': expected a non-negative integer, got '" + v + "'");
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) throw InputError("config '" + key + "': expected a number, got '" + v + "'");
  return out;
}

std::vector<double> to_doubles(const std::string& key, const std::string& v) {
  std::vector<double> out;
  for (const auto& item : split_list(v)) out.push_back(to_double(key, item));
  return out;
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) out += (i ? "," : "") + items[i];
  return out;
}

std::string join(const std::vector<double>& items) {
  std::vector<std::string> s;
  for (double d : items) s.push_back(fmt_double(d));
  return join(s);
}

}  // namespace

const std::vector<std::string>& registered_methods() {
  static const std::vector<std::string> names = {"sigma_k", "nqc",       "wig",          "smv",
                                                 "nsigma",  "model",     "model+nsigma", "pointwise",
                                                 "pointwise+nsigma"};
  return names;
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> out = {"model_profile", "dataset_profile"};
    std::istringstream in(dump_config(ExperimentConfig{}));
    std::string line;
    while (std::getline(in, line)) out.push_back(trim(line.substr(0, line.find('='))));
    return out;
  }();
  return keys;
}

void ExperimentConfig::validate() const {
  for (const auto& m : methods)
    if (std::find(registered_methods().begin(), registered_methods().end(), m) == registered_methods().end())
      throw InputError("unknown method '" + m + "'");
  if (methods.empty()) throw InputError("no methods configured");
  if (encoder != "embeddings" && encoder != "toy") throw InputError("encoder must be 'embeddings' or 'toy'");
  if (n_splits < 1) throw InputError("n_splits must be >= 1");
  parse_label_kind(label_kind);
  parse_strategy(strategy);
  if (inference_strategy != "auto") parse_strategy(inference_strategy);
  for (const auto& a : aggregations) parse_aggregation(a);
  if (aggregations.empty()) throw InputError("no aggregation methods configured");
  if (lr_grid.empty() || std::any_of(lr_grid.begin(), lr_grid.end(), [](double v) { return !(v > 0.0); }))
    throw InputError("lr_grid must hold positive values");
  if (lambda_grid.empty() || std::any_of(lambda_grid.begin(), lambda_grid.end(), [](double v) { return v < 0.0 || v > 1.0; }))
    throw InputError("lambda_grid values must lie in [0, 1]");
  if (x_grid.empty() || std::any_of(x_grid.begin(), x_grid.end(), [](double v) { return !(v > 0.0 && v <= 100.0); }))
    throw InputError("x_grid values must lie in (0, 100]");
  if (!(warmup_fraction > 0.0 && warmup_fraction < 1.0)) throw InputError("warmup_fraction must lie in (0, 1)");
  if (group_size < 1 || train_depth < 1 || infer_depth < 1 || epochs < 1 || baseline_k < 1)
    throw InputError("group_size, depths, epochs and baseline_k must be >= 1");
  if (max_positions < group_size) throw InputError("max_positions must be >= group_size");
  if (n_heads == 0 || d_model % n_heads != 0) throw InputError("d_model must be divisible by n_heads");
  if (passage_stride == 0 || passage_stride > passage_window) throw InputError("need 0 < passage_stride <= passage_window");
}

void apply_model_profile(ExperimentConfig& cfg, const std::string& profile) {
  if (profile == "desk") {
    cfg.group_size = 8;
    cfg.n_heads = 4;
  } else if (profile == "small") {
    cfg.group_size = 128;
    cfg.n_heads = 8;
  } else if (profile == "base") {
    cfg.group_size = 64;
    cfg.n_heads = 8;
  } else if (profile == "large") {
    cfg.group_size = 16;
    cfg.n_heads = 8;
  } else {
    throw InputError("unknown model profile '" + profile + "' (desk, small, base, large)");
  }
  cfg.max_positions = std::max(cfg.max_positions, cfg.group_size);
}

void apply_dataset_profile(ExperimentConfig& cfg, const std::string& profile) {
  if (profile == "robust04" || profile == "gov2")
    cfg.label_kind = "P@10";
  else if (profile == "clueweb09b")
    cfg.label_kind = "AP@1000";
  else if (!profile.empty())
    throw InputError("unknown dataset profile '" + profile + "' (robust04, gov2, clueweb09b)");
  cfg.dataset_profile = profile;
}

void apply_setting(ExperimentConfig& c, const std::string& key, const std::string& v) {
  if (key == "run") c.run_path = v;
  else if (key == "qrels") c.qrels_path = v;
  else if (key == "embeddings") c.embeddings_path = v;
  else if (key == "queries") c.queries_path = v;
  else if (key == "corpus") c.corpus_path = v;
  else if (key == "collection_scores") c.collection_scores_path = v;
  else if (key == "out") c.output_dir = v;
  else if (key == "encoder") c.encoder = v;
  else if (key == "dataset_profile") apply_dataset_profile(c, v);
  else if (key == "model_profile") apply_model_profile(c, v);
  else if (key == "methods") c.methods = split_list(v);
  else if (key == "n_splits") c.n_splits = to_size(key, v);
  else if (key == "seed") c.seed = to_size(key, v);
  else if (key == "threads") c.threads = to_size(key, v);
  else if (key == "label") c.label_kind = v;
  else if (key == "baseline_k") c.baseline_k = to_size(key, v);
  else if (key == "x_grid") c.x_grid = to_doubles(key, v);
  else if (key == "lambda_grid") c.lambda_grid = to_doubles(key, v);
  else if (key == "strategy") c.strategy = v;
  else if (key == "inference_strategy") c.inference_strategy = v;
  else if (key == "group_size") c.group_size = to_size(key, v);
  else if (key == "train_depth") c.train_depth = to_size(key, v);
  else if (key == "infer_depth") c.infer_depth = to_size(key, v);
  else if (key == "epochs") c.epochs = to_size(key, v);
  else if (key == "lr_grid") c.lr_grid = to_doubles(key, v);
  else if (key == "warmup_fraction") c.warmup_fraction = to_double(key, v);
  else if (key == "aggregations") c.aggregations = split_list(v);
  else if (key == "max_steps") c.max_steps = to_size(key, v);
  else if (key == "d_model") c.d_model = to_size(key, v);
  else if (key == "n_heads") c.n_heads = to_size(key, v);
  else if (key == "n_layers") c.n_layers = to_size(key, v);
  else if (key == "max_positions") c.max_positions = to_size(key, v);
  else if (key == "vocab_size") c.vocab_size = to_size(key, v);
  else if (key == "token_dim") c.token_dim = to_size(key, v);
  else if (key == "passage_window") c.passage_window = to_size(key, v);
  else if (key == "passage_stride") c.passage_stride = to_size(key, v);
  else throw InputError("unknown config key '" + key + "'");
}

ExperimentConfig parse_config(std::string_view text, const ExperimentConfig& base) {
  ExperimentConfig cfg = base;
  std::vector<std::pair<std::string, std::string>> settings;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(line_no, "expected `key = value`");
    settings.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  // Profiles first, so explicit keys in the same file override them.
  for (const auto& [k, v] : settings)
    if (k == "model_profile" || k == "dataset_profile") apply_setting(cfg, k, v);
  for (const auto& [k, v] : settings)
    if (k != "model_profile" && k != "dataset_profile") apply_setting(cfg, k, v);
  return cfg;
}

ExperimentConfig load_config(const std::string& path) { return parse_config(read_text_file(path)); }

std::string dump_config(const ExperimentConfig& c) {
  std::vector<std::pair<std::string, std::string>> kv = {
      {"run", c.run_path},
      {"qrels", c.qrels_path},
      {"embeddings", c.embeddings_path},
      {"queries", c.queries_path},
      {"corpus", c.corpus_path},
      {"collection_scores", c.collection_scores_path},
      {"out", c.output_dir},
      {"encoder", c.encoder},
      {"methods", join(c.methods)},
      {"n_splits", std::to_string(c.n_splits)},
      {"seed", std::to_string(c.seed)},
      {"threads", std::to_string(c.threads)},
      {"label", c.label_kind},
      {"baseline_k", std::to_string(c.baseline_k)},
      {"x_grid", join(c.x_grid)},
      {"lambda_grid", join(c.lambda_grid)},
      {"strategy", c.strategy},
      {"inference_strategy", c.inference_strategy},
      {"group_size", std::to_string(c.group_size)},
      {"train_depth", std::to_string(c.train_depth)},
      {"infer_depth", std::to_string(c.infer_depth)},
      {"epochs", std::to_string(c.epochs)},
      {"lr_grid", join(c.lr_grid)},
      {"warmup_fraction", fmt_double(c.warmup_fraction)},
      {"aggregations", join(c.aggregations)},
      {"max_steps", std::to_string(c.max_steps)},
      {"d_model", std::to_string(c.d_model)},
      {"n_heads", std::to_string(c.n_heads)},
      {"n_layers", std::to_string(c.n_layers)},
      {"max_positions", std::to_string(c.max_positions)},
      {"vocab_size", std::to_string(c.vocab_size)},
      {"token_dim", std::to_string(c.token_dim)},
      {"passage_window", std::to_string(c.passage_window)},
      {"passage_stride", std::to_string(c.passage_stride)},
  };
  std::string out;
  if (!c.dataset_profile.empty()) out += "dataset_profile = " + c.dataset_profile + "\n";
  for (const auto& [k, v] : kv) out += k + " = " + v + "\n";
  return out;
}

TrainConfig make_train_config(const ExperimentConfig& c) {
  TrainConfig t;
  t.epochs = c.epochs;
  t.group_size = c.group_size;
  t.lr_grid = c.lr_grid;
  t.warmup_fraction = c.warmup_fraction;
  t.train_depth = c.train_depth;
  t.infer_depth = c.infer_depth;
  t.strategy = parse_strategy(c.strategy);
  if (c.inference_strategy != "auto") t.inference_strategy = parse_strategy(c.inference_strategy);
  t.aggregations.clear();
  for (const auto& a : c.aggregations) t.aggregations.push_back(parse_aggregation(a));
  t.max_steps = c.max_steps;
  t.predictor.d_model = c.d_model;
  t.predictor.n_heads = c.n_heads;
  t.predictor.n_layers = c.n_layers;
  t.predictor.max_positions = c.max_positions;
  t.seed = c.seed;
  return t;
}

}  // namespace gqpp
