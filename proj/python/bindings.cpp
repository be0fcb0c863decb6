#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "gqpp/baselines.hpp"
#include "gqpp/config.hpp"
#include "gqpp/embeddings.hpp"
#include "gqpp/error.hpp"
#include "gqpp/experiment.hpp"
#include "gqpp/metrics.hpp"
#include "gqpp/model.hpp"
#include "gqpp/synthetic.hpp"

namespace py = pybind11;
using namespace gqpp;

namespace {

double score_baseline(const std::string& method, std::vector<double> scores, double collection_score,
                      std::size_t k, double x_percent, int query_length) {
  auto m = parse_baseline(method);
  if (!m) throw InputError("unknown baseline '" + method + "'");
  std::sort(scores.rbegin(), scores.rend());
  ScoreListContext ctx{std::move(scores), collection_score, query_length};
  return evaluate_baseline(*m, ctx, BaselineParams{k, x_percent});
}

py::tuple ttest(const std::vector<double>& a, const std::vector<double>& b) {
  const auto r = paired_t_test(a, b);
  return py::make_tuple(r.t, r.p, r.df);
}

std::vector<std::pair<std::vector<std::string>, std::vector<std::string>>> splits(std::vector<std::string> qids,
                                                                                   std::size_t n, std::uint64_t seed) {
  std::vector<std::pair<std::vector<std::string>, std::vector<std::string>>> out;
  for (const auto& s : make_splits(std::move(qids), n, seed).splits) out.emplace_back(s.fold1, s.fold2);
  return out;
}

void synth(const std::string& dir, std::size_t num_queries, std::size_t docs, std::uint32_t dim, std::uint64_t seed,
           const std::string& signal, bool with_text) {
  SyntheticOptions o;
  o.num_queries = num_queries;
  o.docs_per_query = docs;
  o.dim = dim;
  o.seed = seed;
  if (signal == "dispersion")
    o.signal = SyntheticSignal::Dispersion;
  else if (signal != "planted")
    throw InputError("signal must be 'planted' or 'dispersion'");
  o.with_text = with_text;
  write_synthetic(make_synthetic(o), dir);
}

std::string experiment(const std::string& config_text) {
  const ExperimentConfig cfg = parse_config(config_text);
  cfg.validate();
  py::gil_scoped_release release;
  const ExperimentData data = load_experiment_data(cfg);
  return report_to_json(run_experiment(data, cfg));
}

py::tuple read_embeddings(const std::string& path) {
  const auto store = load_embeddings(path);
  py::list records;
  for (const auto& r : store.records())
    records.append(py::make_tuple(r.qid, r.docid, r.rank, std::vector<double>(r.vec.begin(), r.vec.end())));
  return py::make_tuple(store.dim(), store.encoder_name(), records);
}

void write_embeddings(const std::string& path, std::uint32_t dim, const std::string& encoder,
                      const std::vector<std::tuple<std::string, std::string, std::uint32_t, std::vector<float>>>& records) {
  PairEmbeddingStore store(dim, encoder);
  for (const auto& [q, d, r, v] : records) store.add({q, d, r, v});
  save_embeddings(store, path);
}

}  // namespace

PYBIND11_MODULE(_gqpp, m) {
  m.doc() = "Groupwise query performance prediction core";
  m.attr("__version__") = GQPP_VERSION;

  static py::exception<Error> base_error(m, "Error");
  py::register_exception<DataError>(m, "DataError", base_error.ptr());
  py::register_exception<ContractError>(m, "ContractError", base_error.ptr());
  py::register_exception<NumericalError>(m, "NumericalError", base_error.ptr());

  m.def("kendall_tau", [](const std::vector<double>& x, const std::vector<double>& y) { return kendall_tau_b(x, y); },
        py::arg("x"), py::arg("y"), "Tie-aware Kendall tau-b.");
  m.def("pearson", [](const std::vector<double>& x, const std::vector<double>& y) { return pearson(x, y); },
        py::arg("x"), py::arg("y"));
  m.def("paired_t_test", &ttest, py::arg("a"), py::arg("b"), "Returns (t, p, df).");
  m.def("baseline", &score_baseline, py::arg("method"), py::arg("scores"), py::arg("collection_score") = 0.0,
        py::arg("k") = 100, py::arg("x_percent") = 50.0, py::arg("query_length") = 1,
        "Score-based predictor over one retrieval score list.");
  m.def("aggregate",
        [](const std::vector<double>& preds, const std::string& method) {
          return aggregate(preds, parse_aggregation(method));
        },
        py::arg("predictions"), py::arg("method"));
  m.def("make_splits", &splits, py::arg("qids"), py::arg("n_splits") = 30, py::arg("seed") = 0);
  m.def("write_synthetic", &synth, py::arg("dir"), py::arg("num_queries") = 32, py::arg("docs") = 16,
        py::arg("dim") = 16, py::arg("seed") = 0, py::arg("signal") = "planted", py::arg("with_text") = false);
  m.def("run_experiment", &experiment, py::arg("config_text"), "Runs the protocol; returns the report as JSON.");
  m.def("dump_config", [](const std::string& text) { return dump_config(parse_config(text)); }, py::arg("config_text"));
  m.def("load_embeddings", &read_embeddings, py::arg("path"), "Returns (dim, encoder_name, records).");
  m.def("save_embeddings", &write_embeddings, py::arg("path"), py::arg("dim"), py::arg("encoder_name"),
        py::arg("records"));
}
