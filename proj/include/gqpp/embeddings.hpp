#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace gqpp {

struct PairEmbedding {
  std::string qid;
  std::string docid;
  std::uint32_t rank = 0;
  std::vector<float> vec;

  bool operator==(const PairEmbedding&) const = default;
};

/// One d-dimensional vector per (query, document) pair.
class PairEmbeddingStore {
 public:
  explicit PairEmbeddingStore(std::uint32_t dim = 1, std::string encoder_name = "unknown");

  std::uint32_t dim() const { return dim_; }
  const std::string& encoder_name() const { return encoder_name_; }
  void set_encoder_name(std::string name) { encoder_name_ = std::move(name); }

  /// Throws InputError on dimension mismatch or a duplicate pair.
  void add(PairEmbedding record);

  const std::vector<PairEmbedding>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }

  const PairEmbedding* find(const std::string& qid, const std::string& docid) const;
  /// Throws InputError when the pair is missing.
  const PairEmbedding& at(const std::string& qid, const std::string& docid) const;

  /// Compares dimension and records; the encoder name is metadata only.
  bool operator==(const PairEmbeddingStore& other) const {
    return dim_ == other.dim_ && records_ == other.records_;
  }

 private:
  std::uint32_t dim_;
  std::string encoder_name_;
  std::vector<PairEmbedding> records_;
  std::map<std::pair<std::string, std::string>, std::size_t> index_;
};

inline constexpr std::uint32_t kEmbeddingFormatVersion = 1;

/// Binary interchange: "QPPE", u32 version, u32 dim, then records of
/// u16 qid length + bytes, u16 docid length + bytes, u32 rank, dim f32.
/// All integers and floats little-endian.
std::string encode_embeddings_binary(const PairEmbeddingStore& store);
PairEmbeddingStore decode_embeddings_binary(const std::string& bytes);

/// Textual interchange: JSON object per line plus a sidecar with
/// `dim` and `encoder-name`.
std::string encode_embeddings_text(const PairEmbeddingStore& store);
std::string encode_embeddings_sidecar(const PairEmbeddingStore& store);
PairEmbeddingStore decode_embeddings_text(const std::string& lines, const std::string& sidecar);

/// Sidecar path of a textual embedding file: `<path>.meta.json`.
std::string embedding_sidecar_path(const std::string& path);

/// Writes the textual format when the path ends in `.jsonl`, binary
/// otherwise; both get a sidecar.
void save_embeddings(const PairEmbeddingStore& store, const std::string& path);
/// Detects the binary format by its magic bytes, otherwise reads text +
/// sidecar. The sidecar of a binary file is optional.
PairEmbeddingStore load_embeddings(const std::string& path);

}  // namespace gqpp
