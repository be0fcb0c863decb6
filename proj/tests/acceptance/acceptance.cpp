// Property suite for the groupwise predictor workbench. Prints one
// PASS/FAIL line per property and exits non-zero if any fails. Arguments,
// when given, select properties by name.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "gqpp/autodiff.hpp"
#include "gqpp/baselines.hpp"
#include "gqpp/error.hpp"
#include "gqpp/experiment.hpp"
#include "gqpp/log.hpp"
#include "gqpp/metrics.hpp"
#include "gqpp/model.hpp"
#include "gqpp/rng.hpp"
#include "gqpp/synthetic.hpp"
#include "gqpp/trainer.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace gqpp;

namespace {

// Pinned tolerances and budgets.
constexpr double kGradTolerance = 1e-4;
constexpr double kGradSeconds = 60.0;
constexpr double kMetricTolerance = 1e-12;
constexpr double kTTestT = 3.4641;
constexpr double kTTestP = 0.0742;
constexpr double kTTestTolerance = 1e-3;
constexpr double kPredictorTolerance = 1e-9;
constexpr double kEquivarianceTolerance = 1e-9;
constexpr std::size_t kOverfitMaxSteps = 500;
constexpr double kOverfitTau = 0.9;
constexpr double kOverfitSeconds = 300.0;
constexpr double kBenefitMargin = 0.05;
constexpr std::size_t kBenefitSeeds = 5;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* format, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, format, a, b, c, d);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

Outcome gradient_correctness() {
  const auto start = std::chrono::steady_clock::now();
  auto texts = std::make_shared<PairTexts>();
  Rng rng(17);
  Group group;
  const std::vector<std::string> words = {"alpha", "beta", "gamma", "delta", "eps", "zeta", "eta", "theta", "iota"};
  for (int i = 0; i < 6; ++i) {
    const std::string qid = "q" + std::to_string(i % 2), docid = "d" + std::to_string(i);
    Tokens q = {words[rng.uniform_index(words.size())], words[rng.uniform_index(words.size())]};
    Tokens d;
    for (int t = 0; t < 5 + i; ++t) d.push_back(words[rng.uniform_index(words.size())]);
    (*texts)[{qid, docid}] = {q, d};
    group.items.push_back({qid, docid, i + 1});
    group.position_ids.push_back(i);
    group.mask.push_back(1);
  }
  group.kind = GroupKind::Doc;

  ToyEncoderConfig ec{64, 16, 16, 32};
  ToyPairEncoder encoder(texts, ec, 5);
  GroupwisePredictor predictor(PredictorConfig{16, 4, 4, 4, 8}, 6);
  ad::ParameterSet all;
  all.extend(predictor.params());
  all.extend(*encoder.trainable());
  const std::vector<double> labels = {0.9, 0.1, 0.5, 0.3, 0.7, 0.2};
  const auto r = ad::grad_check(
      [&](ad::Tape& tape) {
        auto x = encoder.encode_group(tape, group);
        return mse_loss(tape, predictor.forward(tape, x, group.position_ids, group.mask), labels, group.mask);
      },
      all, 1e-4);
  const double secs = seconds_since(start);
  Outcome out;
  out.pass = r.max_rel_error <= kGradTolerance && secs < kGradSeconds;
  out.detail = fmt("max rel error %.3g over %.0f coordinates, %.1fs", r.max_rel_error,
                   static_cast<double>(r.coordinates), secs) +
               " worst " + r.worst_param + fmt(" (analytic %.6g numeric %.6g)", r.analytic, r.numeric);
  return out;
}

Outcome metric_oracles() {
  Rng rng(101);
  double worst = 0.0;
  for (int trial = 0; trial < 100;) {
    const std::size_t n = 2 + rng.uniform_index(11);
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = rng.uniform() < 0.5 ? static_cast<double>(rng.uniform_index(4)) : rng.normal();
      y[i] = rng.uniform() < 0.5 ? static_cast<double>(rng.uniform_index(4)) : rng.normal();
    }
    if (std::all_of(x.begin(), x.end(), [&](double v) { return v == x[0]; }) ||
        std::all_of(y.begin(), y.end(), [&](double v) { return v == y[0]; }))
      continue;
    worst = std::max(worst, std::abs(kendall_tau_b(x, y) - test_support::brute_kendall(x, y)));
    worst = std::max(worst, std::abs(pearson(x, y) - test_support::direct_pearson(x, y)));
    ++trial;
  }
  const Qrels qrels = parse_qrels("q 0 r1 1\nq 0 r2 1\nq 0 n1 0\np 0 r 1\n");
  const std::vector<std::string> rnr = {"r1", "n1", "r2"}, r = {"r"};
  const double ap1 = *average_precision(rnr, qrels, "q");
  const double ap2 = *average_precision(r, qrels, "p");
  const std::vector<double> d = {1, 2, 3}, zero = {0, 0, 0};
  const auto t = paired_t_test(d, zero);
  Outcome out;
  out.pass = worst <= kMetricTolerance && fmt("%.6f", ap1) == "0.833333" && std::abs(ap1 - 5.0 / 6.0) <= 1e-15 &&
             ap2 == 1.0 && std::abs(t.t - kTTestT) <= kTTestTolerance && std::abs(t.p - kTTestP) <= kTTestTolerance;
  out.detail = fmt("worst |diff| %.2g; AP %.6f, %.6f; t %.4f", worst, ap1, ap2, t.t) + fmt(" p %.4f", t.p);
  return out;
}

Outcome predictor_oracles() {
  Rng rng(202);
  double worst = 0.0, worst_scaled = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t m = 1 + rng.uniform_index(60);
    const bool positive = trial % 2 == 0;
    std::vector<double> s(m);
    for (auto& v : s) v = positive ? rng.uniform(0.5, 30.0) : rng.normal() * 5.0;
    std::sort(s.rbegin(), s.rend());
    const double sc = (rng.uniform() < 0.5 ? -1.0 : 1.0) * rng.uniform(0.5, 20.0);
    const int qlen = 1 + static_cast<int>(rng.uniform_index(6));
    const std::size_t k = 1 + rng.uniform_index(m);
    const double x = rng.uniform(1.0, 100.0);
    ScoreListContext c{s, sc, qlen};
    worst = std::max({worst, std::abs(sigma_k(c, k) - oracle::sigma(s, k)),
                      std::abs(nqc(c, k) - oracle::nqc(s, k, sc)),
                      std::abs(wig(c, k) - oracle::wig(s, k, sc, qlen)),
                      std::abs(smv(c, k) - oracle::smv(s, k, sc)),
                      std::abs(n_sigma_x(c, x) - oracle::nsigma(s, x, sc))});
    if (!positive) continue;
    const double a = rng.uniform(0.01, 100.0);
    ScoreListContext scaled{s, sc * a, qlen};
    for (auto& v : scaled.scores) v *= a;
    worst_scaled = std::max({worst_scaled, std::abs(nqc(scaled, k) - nqc(c, k)),
                             std::abs(smv(scaled, k) - smv(c, k)),
                             std::abs(n_sigma_x(scaled, x) - n_sigma_x(c, x))});
  }
  Outcome out;
  out.pass = worst <= kPredictorTolerance && worst_scaled <= kPredictorTolerance;
  out.detail = fmt("worst oracle diff %.2g, worst scaling diff %.2g", worst, worst_scaled);
  return out;
}

Outcome permutation_equivariance() {
  GroupwisePredictor model(PredictorConfig{16, 4, 4, 4, 8}, 9);
  Rng rng(9);
  std::vector<double> v(4 * 16);
  for (auto& x : v) x = rng.normal();
  const std::vector<int> pos(4, 0);
  const std::vector<std::uint8_t> mask(4, 1);
  auto run = [&](const std::vector<std::size_t>& perm) {
    std::vector<double> p(v.size());
    for (std::size_t i = 0; i < 4; ++i) std::copy_n(v.begin() + perm[i] * 16, 16, p.begin() + i * 16);
    ad::Tape tape(false);
    auto out = model.forward(tape, ad::Tensor::from(4, 16, p), pos, mask);
    return std::vector<double>(out.data().begin(), out.data().end());
  };
  std::vector<std::size_t> perm = {0, 1, 2, 3};
  const auto base = run(perm);
  double worst = 0.0;
  int count = 0;
  do {
    const auto out = run(perm);
    for (std::size_t i = 0; i < 4; ++i) worst = std::max(worst, std::abs(out[i] - base[perm[i]]));
    ++count;
  } while (std::next_permutation(perm.begin(), perm.end()));
  Outcome out;
  out.pass = count == 24 && worst <= kEquivarianceTolerance;
  out.detail = fmt("%.0f permutations, worst |diff| %.2g", count, worst);
  return out;
}

Outcome overfit_sanity() {
  const auto start = std::chrono::steady_clock::now();
  SyntheticOptions opt;
  opt.num_queries = 32;
  opt.docs_per_query = 16;
  opt.dim = 16;
  opt.seed = 3;
  const auto data = make_synthetic(opt);
  EmbeddingPairEncoder encoder(std::make_shared<const PairEmbeddingStore>(data.embeddings));
  TrainConfig cfg;
  cfg.strategy = GroupingStrategy::RQD;
  cfg.group_size = 8;
  cfg.train_depth = 16;
  cfg.infer_depth = 16;
  cfg.epochs = 3;
  cfg.max_steps = kOverfitMaxSteps;
  cfg.predictor = PredictorConfig{16, 4, 4, 4, 8};
  const auto fitted = fit(TrainingSet{&data.run, data.quality, data.quality}, encoder, cfg, 1e-3, 1);
  const auto pred = predict(fitted.model, data.run, 16, AggregationMethod::Mean, data.quality, 2);
  const double tau = tau_against(pred, data.quality);
  const double secs = seconds_since(start);
  Outcome out;
  out.pass = fitted.log.size() <= kOverfitMaxSteps && tau >= kOverfitTau && secs < kOverfitSeconds;
  out.detail = fmt("train tau %.4f after %.0f steps, %.1fs", tau, static_cast<double>(fitted.log.size()), secs);
  return out;
}

ExperimentData as_data(const SyntheticCollection& s) {
  ExperimentData d;
  d.run = s.run;
  d.qrels = s.qrels;
  d.embeddings = std::make_shared<const PairEmbeddingStore>(s.embeddings);
  return d;
}

ExperimentConfig desk_config() {
  return parse_config(
      "model_profile = desk\n"
      "label = AP@1000\n"
      "train_depth = 16\ninfer_depth = 16\nbaseline_k = 16\n"
      "epochs = 4\nlr_grid = 0.001, 0.0003\naggregations = max, mean, first\n"
      "d_model = 16\nn_heads = 4\nn_layers = 2\nthreads = 1\n");
}

Outcome groupwise_benefit() {
  double sum8 = 0.0, sum1 = 0.0;
  std::string per_seed;
  for (std::size_t seed = 0; seed < kBenefitSeeds; ++seed) {
    SyntheticOptions opt;
    opt.num_queries = 300;
    opt.docs_per_query = 16;
    opt.dim = 16;
    opt.seed = 100 + seed;
    opt.signal = SyntheticSignal::Dispersion;
    const auto data = as_data(make_synthetic(opt));
    auto cfg = desk_config();
    cfg.methods = {"model", "pointwise"};
    cfg.n_splits = 1;
    cfg.epochs = 10;
    cfg.lr_grid = {1e-3};
    cfg.seed = seed;
    const auto report = run_experiment(data, cfg);
    const double t8 = report.summary.at("model").mean_kendall;
    const double t1 = report.summary.at("pointwise").mean_kendall;
    sum8 += t8;
    sum1 += t1;
    per_seed += fmt(" [%.3f %.3f]", t8, t1);
  }
  const double m8 = sum8 / kBenefitSeeds, m1 = sum1 / kBenefitSeeds;
  Outcome out;
  out.pass = m8 - m1 >= kBenefitMargin;
  out.detail = fmt("mean test tau n=8 %.4f, n=1 %.4f, margin %.4f;", m8, m1, m8 - m1) + per_seed;
  return out;
}

Outcome determinism_and_leakage() {
  SyntheticOptions opt;
  opt.num_queries = 24;
  opt.docs_per_query = 16;
  opt.dim = 16;
  opt.seed = 7;
  const auto data = as_data(make_synthetic(opt));
  auto cfg = desk_config();
  cfg.methods = {"sigma_k", "nqc", "wig", "smv", "nsigma", "model", "model+nsigma"};
  cfg.n_splits = 30;
  cfg.epochs = 1;
  cfg.seed = 7;
  test_support::TempDir dir("acceptance-det");
  cfg.output_dir = dir.file("a");
  write_report(run_experiment(data, cfg), cfg.output_dir);
  cfg.output_dir = dir.file("b");
  write_report(run_experiment(data, cfg), cfg.output_dir);
  const bool identical = read_text_file(dir.file("a/report.json")) == read_text_file(dir.file("b/report.json")) &&
                         read_text_file(dir.file("a/report.txt")) == read_text_file(dir.file("b/report.txt"));

  const auto labels = make_experiment_labels(data, cfg);
  std::vector<std::string> qids;
  for (const auto& [q, v] : labels.evaluation) qids.push_back(q);
  const auto plan = make_splits(qids, 5, 99);
  std::size_t unchanged = 0, moved = 0;
  for (std::size_t i = 0; i < plan.splits.size(); ++i) {
    const auto& split = plan.splits[i];
    auto permuted = labels;
    Rng rng(derive_seed(99, i));
    std::vector<std::string> order = split.fold2;
    rng.shuffle(std::span<std::string>(order));
    for (std::size_t j = 0; j < order.size(); ++j) {
      permuted.evaluation[split.fold2[j]] = labels.evaluation.at(order[j]);
      permuted.supervision[split.fold2[j]] = labels.supervision.at(order[j]);
    }
    const auto a = run_split(data, cfg, labels, i, split);
    const auto b = run_split(data, cfg, permuted, i, split);
    if (a.tuned == b.tuned) ++unchanged;
    if (a.methods != b.methods) ++moved;
  }
  Outcome out;
  // The permutation must reach the test-fold correlations for the check to mean anything.
  out.pass = identical && unchanged == plan.splits.size() && moved == plan.splits.size();
  out.detail = std::string(identical ? "30-split reports byte-identical" : "reports differ") +
               fmt("; tuned parameters unchanged on %.0f of %.0f permuted splits (test correlations moved on %.0f)",
                   static_cast<double>(unchanged), static_cast<double>(plan.splits.size()),
                   static_cast<double>(moved));
  return out;
}

Outcome aggregation_contract() {
  const std::vector<double> p = {0.2, 0.8, 0.5};
  const double mx = aggregate(p, AggregationMethod::Max);
  const double mean = aggregate(p, AggregationMethod::Mean);
  const double first = aggregate(p, AggregationMethod::FirstRankedDoc);
  Outcome out;
  out.pass = mx == 0.8 && mean == 0.5 && first == 0.2;
  out.detail = fmt("max %.17g mean %.17g first %.17g", mx, mean, first);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  set_warning_sink({});
  const std::vector<std::pair<std::string, std::function<Outcome()>>> properties = {
      {"gradient-correctness", gradient_correctness},
      {"metric-oracles", metric_oracles},
      {"predictor-oracles", predictor_oracles},
      {"permutation-equivariance", permutation_equivariance},
      {"overfit-sanity", overfit_sanity},
      {"groupwise-benefit", groupwise_benefit},
      {"determinism-and-leakage", determinism_and_leakage},
      {"aggregation-contract", aggregation_contract},
  };
  const std::vector<std::string> only(argv + 1, argv + argc);
  int failed = 0;
  for (const auto& [name, check] : properties) {
    if (!only.empty() && std::find(only.begin(), only.end(), name) == only.end()) continue;
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  }
  return failed == 0 ? 0 : 1;
}
