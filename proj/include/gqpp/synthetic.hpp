#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gqpp/baselines.hpp"
#include "gqpp/data_model.hpp"
#include "gqpp/embeddings.hpp"

namespace gqpp {

/// How query quality shows up in the pair vectors.
enum class SyntheticSignal {
  /// Every pair vector carries the quality of its query along one direction.
  Planted,
  /// Pair vectors carry a per-document feature whose spread within the list,
  /// not its level, grows with query quality.
  Dispersion,
};

struct SyntheticOptions {
  std::size_t num_queries = 32;
  std::size_t docs_per_query = 16;
  std::uint32_t dim = 16;
  std::uint64_t seed = 0;
  SyntheticSignal signal = SyntheticSignal::Planted;
  double noise = 0.1;
  bool with_text = false;
};

/// A small self-consistent collection: ranked lists, judgments, pair
/// vectors and (optionally) query and document texts.
struct SyntheticCollection {
  RetrievalRun run;
  Qrels qrels;
  PairEmbeddingStore embeddings;
  std::vector<QueryRecord> queries;
  std::vector<DocRecord> corpus;
  /// Latent quality in [0, 1] of every query.
  QueryScores quality;
};

SyntheticCollection make_synthetic(const SyntheticOptions& options);

/// Writes run.txt, qrels.txt, embeddings.qppe and, with texts, queries.tsv
/// and corpus.tsv into `dir` (created if missing).
void write_synthetic(const SyntheticCollection& data, const std::string& dir);

}  // namespace gqpp
