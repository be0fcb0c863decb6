#include "gqpp/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "gqpp/error.hpp"
#include "gqpp/rng.hpp"

namespace gqpp {
namespace {

std::string qid_of(std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "q%03zu", i + 1);
  return buf;
}

std::string docid_of(std::size_t q, std::size_t r) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "d%03zu-%03zu", q + 1, r + 1);
  return buf;
}

std::vector<double> unit_direction(Rng& rng, std::uint32_t dim) {
  std::vector<double> u(dim);
  double norm = 0.0;
  for (auto& v : u) {
    v = rng.normal();
    norm += v * v;
  }
  norm = std::sqrt(norm);
  for (auto& v : u) v /= norm;
  return u;
}

}  // namespace

SyntheticCollection make_synthetic(const SyntheticOptions& o) {
  if (o.num_queries == 0 || o.docs_per_query == 0 || o.dim == 0)
    throw InputError("synthetic collection needs at least one query, document and dimension");
  Rng rng(o.seed);
  SyntheticCollection out;
  out.embeddings = PairEmbeddingStore(o.dim, "synthetic");
  const auto direction = unit_direction(rng, o.dim);
  const std::size_t m = o.docs_per_query;
  const double scale = 2.0;
  const std::vector<std::string> vocabulary = {"alpha", "bravo", "charlie", "delta", "echo",  "foxtrot",
                                               "golf",  "hotel", "india",   "juliet", "kilo", "lima"};

  RetrievalRun::Map lists;
  for (std::size_t q = 0; q < o.num_queries; ++q) {
    const std::string qid = qid_of(q);
    const double quality = rng.uniform();
    out.quality[qid] = quality;

    // Per-document features, in rank order.
    std::vector<double> feature(m);
    if (o.signal == SyntheticSignal::Planted) {
      std::fill(feature.begin(), feature.end(), (2.0 * quality - 1.0) * scale);
    } else {
      const double level = 1.5 * rng.normal();
      const double spread = 0.25 + quality;
      std::vector<double> z(m);
      for (auto& v : z) v = rng.normal();
      std::sort(z.rbegin(), z.rend());
      for (std::size_t r = 0; r < m; ++r) feature[r] = level + spread * z[r];
    }

    std::vector<double> scores(m);
    for (std::size_t r = 0; r < m; ++r)
      scores[r] = 10.0 + 3.0 * quality * std::exp(-0.2 * static_cast<double>(r)) + 0.3 * rng.normal();
    std::sort(scores.rbegin(), scores.rend());

    Tokens qtext;
    if (o.with_text) {
      qtext = {"topic" + std::to_string(q + 1), vocabulary[q % vocabulary.size()],
               vocabulary[(q * 7 + 3) % vocabulary.size()]};
      out.queries.push_back({qid, qtext});
    }

    auto& entries = lists[qid];
    for (std::size_t r = 0; r < m; ++r) {
      const std::string docid = docid_of(q, r);
      entries.push_back({qid, docid, static_cast<int>(r + 1), scores[r], static_cast<int>(r + 1)});

      PairEmbedding e{qid, docid, static_cast<std::uint32_t>(r + 1), std::vector<float>(o.dim)};
      for (std::uint32_t j = 0; j < o.dim; ++j)
        e.vec[j] = static_cast<float>(feature[r] * direction[j] + o.noise * rng.normal());
      out.embeddings.add(std::move(e));

      const double p_rel = std::clamp(
          quality * (1.0 - 0.5 * static_cast<double>(r) / static_cast<double>(m)) + 0.05, 0.0, 1.0);
      const bool relevant = rng.uniform() < p_rel;
      if (relevant || rng.uniform() < 0.5) out.qrels.set({qid, docid, relevant ? 1 : 0});

      if (o.with_text) {
        Tokens body;
        for (int t = 0; t < 40; ++t) body.push_back(vocabulary[rng.uniform_index(vocabulary.size())] + "x");
        // Query terms show up more often in documents of easy queries.
        for (const auto& term : qtext)
          for (int t = 0; t < 8; ++t)
            if (rng.uniform() < quality) body[rng.uniform_index(body.size())] = term;
        out.corpus.push_back({docid, body});
      }
    }
    out.qrels.set({qid, qid + "-unretrieved", 1});
  }
  out.run = RetrievalRun(std::move(lists));
  return out;
}

void write_synthetic(const SyntheticCollection& data, const std::string& dir) {
  std::filesystem::create_directories(dir);
  const std::string base = dir + "/";
  write_text_file(base + "run.txt", serialize_run(data.run, "synthetic"));
  write_text_file(base + "qrels.txt", serialize_qrels(data.qrels));
  save_embeddings(data.embeddings, base + "embeddings.qppe");
  if (!data.queries.empty()) {
    std::string q;
    for (const auto& rec : data.queries) {
      q += rec.qid + "\t";
      for (std::size_t i = 0; i < rec.text.size(); ++i) q += (i ? " " : "") + rec.text[i];
      q += "\n";
    }
    write_text_file(base + "queries.tsv", q);
    std::string c;
    for (const auto& rec : data.corpus) {
      c += rec.docid + "\t";
      for (std::size_t i = 0; i < rec.text.size(); ++i) c += (i ? " " : "") + rec.text[i];
      c += "\n";
    }
    write_text_file(base + "corpus.tsv", c);
  }
}

}  // namespace gqpp
