#include "doctest.h"
#include "support.hpp"

#include <cstring>

#include "gqpp/embeddings.hpp"
#include "gqpp/error.hpp"
#include "gqpp/rng.hpp"

using namespace gqpp;

namespace {

PairEmbeddingStore random_store(std::uint32_t dim, std::size_t n, std::uint64_t seed) {
  PairEmbeddingStore store(dim, "enc-" + std::to_string(seed));
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    PairEmbedding r{"q" + std::to_string(i % 3), "doc\t" + std::to_string(i), static_cast<std::uint32_t>(i + 1), {}};
    for (std::uint32_t k = 0; k < dim; ++k) r.vec.push_back(static_cast<float>(rng.normal() * 1e3));
    store.add(r);
  }
  return store;
}

}  // namespace

TEST_CASE("one record of dimension 4 round-trips in both formats") {
  PairEmbeddingStore store(4, "toy");
  store.add({"q1", "d1", 1, {0.1f, -2.5f, 3e-7f, 1e30f}});
  auto bin = decode_embeddings_binary(encode_embeddings_binary(store));
  CHECK(bin == store);
  CHECK(bin.records()[0].vec == store.records()[0].vec);
  auto txt = decode_embeddings_text(encode_embeddings_text(store), encode_embeddings_sidecar(store));
  CHECK(txt == store);
  CHECK(txt.encoder_name() == "toy");
}

TEST_CASE("binary layout is little-endian with the documented header") {
  PairEmbeddingStore store(1);
  store.add({"a", "b", 7, {1.0f}});
  const auto bytes = encode_embeddings_binary(store);
  CHECK(bytes.size() == 4 + 4 + 4 + 2 + 1 + 2 + 1 + 4 + 4);
  CHECK(bytes.substr(0, 4) == "QPPE");
  CHECK(bytes[4] == 1);
  CHECK(bytes[8] == 1);
  CHECK(bytes[12] == 1);
  CHECK(bytes[14] == 'a');
  CHECK(bytes[18] == 7);
  CHECK(static_cast<unsigned char>(bytes[25]) == 0x3f);
  CHECK(static_cast<unsigned char>(bytes[24]) == 0x80);
}

TEST_CASE("random stores round-trip through files") {
  test_support::TempDir dir("emb");
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto store = random_store(static_cast<std::uint32_t>(1 + seed * 3), 10, seed);
    save_embeddings(store, dir.file("e.qppe"));
    save_embeddings(store, dir.file("e.jsonl"));
    auto a = load_embeddings(dir.file("e.qppe"));
    auto b = load_embeddings(dir.file("e.jsonl"));
    CHECK(a == store);
    CHECK(b == store);
    CHECK(a.encoder_name() == store.encoder_name());
    CHECK(b.encoder_name() == store.encoder_name());
  }
}

TEST_CASE("empty store round-trips") {
  PairEmbeddingStore store(3);
  CHECK(decode_embeddings_binary(encode_embeddings_binary(store)) == store);
  CHECK(decode_embeddings_text(encode_embeddings_text(store), encode_embeddings_sidecar(store)) == store);
}

TEST_CASE("malformed embedding files") {
  PairEmbeddingStore store(4);
  store.add({"q1", "d1", 1, {1, 2, 3, 4}});
  const auto bytes = encode_embeddings_binary(store);
  CHECK_THROWS_AS(decode_embeddings_binary(bytes.substr(0, bytes.size() - 3)), FormatError);
  CHECK_THROWS_AS(decode_embeddings_binary("QPPX" + bytes.substr(4)), FormatError);
  CHECK_THROWS_AS(decode_embeddings_binary(bytes + bytes.substr(12)), FormatError);

  PairEmbeddingStore wide(8);
  const auto sidecar8 = encode_embeddings_sidecar(wide);
  CHECK_THROWS_AS(decode_embeddings_text(encode_embeddings_text(store), sidecar8), FormatError);
  CHECK_THROWS_AS(decode_embeddings_text("{\"qid\":\"q\"}\n", encode_embeddings_sidecar(store)), FormatError);
  CHECK_THROWS_AS(decode_embeddings_text("", "{}"), FormatError);

  test_support::TempDir dir("emb-bad");
  save_embeddings(store, dir.file("e.qppe"));
  write_text_file(embedding_sidecar_path(dir.file("e.qppe")), encode_embeddings_sidecar(wide));
  CHECK_THROWS_AS(load_embeddings(dir.file("e.qppe")), FormatError);
  CHECK_THROWS_AS(load_embeddings(dir.file("missing.qppe")), DataError);
}

TEST_CASE("store lookups") {
  PairEmbeddingStore store(2);
  store.add({"q", "d", 1, {1, 2}});
  CHECK(store.find("q", "d") != nullptr);
  CHECK(store.find("q", "x") == nullptr);
  CHECK_THROWS_AS(store.at("q", "x"), InputError);
  CHECK_THROWS_AS(store.add({"q", "d", 1, {1, 2}}), InputError);
  CHECK_THROWS_AS(store.add({"q", "e", 1, {1}}), InputError);
}
