#include "gqpp/embeddings.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>

#include "json.hpp"

#include "gqpp/data_model.hpp"
#include "gqpp/error.hpp"

namespace gqpp {
namespace {

constexpr char kMagic[4] = {'Q', 'P', 'P', 'E'};

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>(v >> 8));
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  bool at_end() const { return pos_ == bytes_.size(); }

  const char* take(std::size_t n, const char* what) {
    if (bytes_.size() - pos_ < n) throw FormatError(std::string("truncated embedding file while reading ") + what);
    const char* p = bytes_.data() + pos_;
    pos_ += n;
    return p;
  }

  std::uint16_t u16(const char* what) {
    auto p = reinterpret_cast<const unsigned char*>(take(2, what));
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
  }

  std::uint32_t u32(const char* what) {
    auto p = reinterpret_cast<const unsigned char*>(take(4, what));
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
  }

 private:
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

void put_string16(std::string& out, const std::string& s) {
  if (s.size() > 0xffff) throw InputError("identifier longer than 65535 bytes");
  put_u16(out, static_cast<std::uint16_t>(s.size()));
  out += s;
}

}  // namespace

PairEmbeddingStore::PairEmbeddingStore(std::uint32_t dim, std::string encoder_name)
    : dim_(dim), encoder_name_(std::move(encoder_name)) {
  if (dim_ == 0) throw InputError("embedding dimension must be >= 1");
}

void PairEmbeddingStore::add(PairEmbedding record) {
  if (record.vec.size() != dim_)
    throw InputError("embedding for (" + record.qid + ", " + record.docid + ") has dimension " +
                     std::to_string(record.vec.size()) + ", store expects " + std::to_string(dim_));
  auto key = std::make_pair(record.qid, record.docid);
  if (index_.count(key)) throw InputError("duplicate embedding for (" + record.qid + ", " + record.docid + ")");
  index_.emplace(std::move(key), records_.size());
  records_.push_back(std::move(record));
}

const PairEmbedding* PairEmbeddingStore::find(const std::string& qid, const std::string& docid) const {
  auto it = index_.find({qid, docid});
  return it == index_.end() ? nullptr : &records_[it->second];
}

const PairEmbedding& PairEmbeddingStore::at(const std::string& qid, const std::string& docid) const {
  const auto* r = find(qid, docid);
  if (!r) throw InputError("missing embedding for (" + qid + ", " + docid + ")");
  return *r;
}

std::string encode_embeddings_binary(const PairEmbeddingStore& store) {
  std::string out(kMagic, 4);
  put_u32(out, kEmbeddingFormatVersion);
  put_u32(out, store.dim());
  for (const auto& r : store.records()) {
    put_string16(out, r.qid);
    put_string16(out, r.docid);
    put_u32(out, r.rank);
    for (float f : r.vec) put_u32(out, std::bit_cast<std::uint32_t>(f));
  }
  return out;
}

PairEmbeddingStore decode_embeddings_binary(const std::string& bytes) {
  Reader in(bytes);
  if (std::memcmp(in.take(4, "magic"), kMagic, 4) != 0) throw FormatError("bad magic, expected QPPE");
  std::uint32_t version = in.u32("version");
  if (version != kEmbeddingFormatVersion) throw FormatError("unsupported embedding format version " + std::to_string(version));
  std::uint32_t dim = in.u32("dimension");
  if (dim == 0) throw FormatError("embedding dimension 0");
  PairEmbeddingStore store(dim, "unknown");
  while (!in.at_end()) {
    PairEmbedding r;
    std::uint16_t n = in.u16("qid length");
    r.qid.assign(in.take(n, "qid"), n);
    n = in.u16("docid length");
    r.docid.assign(in.take(n, "docid"), n);
    r.rank = in.u32("rank");
    r.vec.resize(dim);
    for (auto& f : r.vec) f = std::bit_cast<float>(in.u32("vector"));
    try {
      store.add(std::move(r));
    } catch (const InputError& e) {
      throw FormatError(e.what());
    }
  }
  return store;
}

std::string encode_embeddings_text(const PairEmbeddingStore& store) {
  std::string out;
  char buf[32];
  for (const auto& r : store.records()) {
    nlohmann::json head = {{"qid", r.qid}, {"docid", r.docid}, {"rank", r.rank}};
    std::string line = head.dump();
    line.pop_back();
    line += ",\"vec\":[";
    for (std::size_t i = 0; i < r.vec.size(); ++i) {
      // 9 significant digits round-trip any float32 exactly.
      std::snprintf(buf, sizeof buf, "%.9g", static_cast<double>(r.vec[i]));
      if (i) line += ',';
      line += buf;
    }
    line += "]}\n";
    out += line;
  }
  return out;
}

std::string encode_embeddings_sidecar(const PairEmbeddingStore& store) {
  nlohmann::json meta = {{"dim", store.dim()}, {"encoder-name", store.encoder_name()}};
  return meta.dump(2) + "\n";
}

PairEmbeddingStore decode_embeddings_text(const std::string& lines, const std::string& sidecar) {
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(sidecar);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad embedding sidecar: ") + e.what());
  }
  if (!meta.contains("dim") || !meta["dim"].is_number_unsigned() || meta["dim"].get<std::uint32_t>() == 0)
    throw FormatError("embedding sidecar lacks a positive `dim`");
  PairEmbeddingStore store(meta["dim"].get<std::uint32_t>(), meta.value("encoder-name", std::string("unknown")));
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < lines.size()) {
    std::size_t end = lines.find('\n', pos);
    if (end == std::string::npos) end = lines.size();
    std::string_view line(lines.data() + pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    PairEmbedding r;
    try {
      auto obj = nlohmann::json::parse(line);
      r.qid = obj.at("qid").get<std::string>();
      r.docid = obj.at("docid").get<std::string>();
      r.rank = obj.at("rank").get<std::uint32_t>();
      for (const auto& v : obj.at("vec")) r.vec.push_back(static_cast<float>(v.get<double>()));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("embedding line " + std::to_string(line_no) + ": " + e.what());
    }
    if (r.vec.size() != store.dim())
      throw FormatError("embedding line " + std::to_string(line_no) + ": vector has " + std::to_string(r.vec.size()) +
                        " values, header declares " + std::to_string(store.dim()));
    try {
      store.add(std::move(r));
    } catch (const InputError& e) {
      throw FormatError("embedding line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return store;
}

std::string embedding_sidecar_path(const std::string& path) { return path + ".meta.json"; }

void save_embeddings(const PairEmbeddingStore& store, const std::string& path) {
  if (path.size() >= 6 && path.compare(path.size() - 6, 6, ".jsonl") == 0) {
    write_text_file(path, encode_embeddings_text(store));
    write_text_file(embedding_sidecar_path(path), encode_embeddings_sidecar(store));
  } else {
    write_text_file(path, encode_embeddings_binary(store));
    write_text_file(embedding_sidecar_path(path), encode_embeddings_sidecar(store));
  }
}

PairEmbeddingStore load_embeddings(const std::string& path) {
  std::string bytes = read_text_file(path);
  if (bytes.size() >= 4 && std::memcmp(bytes.data(), kMagic, 4) == 0) {
    PairEmbeddingStore store = decode_embeddings_binary(bytes);
    const std::string sidecar = embedding_sidecar_path(path);
    if (std::filesystem::exists(sidecar)) {
      const PairEmbeddingStore meta = decode_embeddings_text("", read_text_file(sidecar));
      if (meta.dim() != store.dim())
        throw FormatError("sidecar declares dim " + std::to_string(meta.dim()) + ", file holds " +
                          std::to_string(store.dim()));
      store.set_encoder_name(meta.encoder_name());
    }
    return store;
  }
  return decode_embeddings_text(bytes, read_text_file(embedding_sidecar_path(path)));
}

}  // namespace gqpp
