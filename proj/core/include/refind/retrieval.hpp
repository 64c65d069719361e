#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "refind/corpus.hpp"

namespace refind::retrieval {

inline constexpr const char* kIndexFile = "bm25.json";

// Lowercased terms split on every non-alphanumeric scalar. No stemming.
std::vector<std::string> tokenize(std::string_view utf8);

struct Bm25Params {
  double k1 = 1.2;
  double b = 0.75;

  void validate() const;
};

// Non-negative idf: ln(1 + (N - df + 0.5) / (df + 0.5)).
double bm25_idf(std::size_t n_docs, std::size_t df);

struct Posting {
  std::uint32_t doc = 0;  // position in chunk order
  std::uint32_t tf = 0;
};

class Bm25Index {
 public:
  static Bm25Index build(const corpus::ChunkStore& store, const Bm25Params& params = {});

  // Persist as `bm25.json` beside the store; load verifies the store has not
  // changed since the index was built.
  void save(const std::filesystem::path& path) const;
  static Bm25Index load(const std::filesystem::path& path, const corpus::ChunkStore& store);
  std::string serialize() const;

  std::size_t doc_count() const noexcept { return chunk_ids_.size(); }
  double avg_length() const noexcept { return avg_length_; }
  std::size_t length(std::size_t doc) const { return lengths_.at(doc); }
  const std::string& chunk_id(std::size_t doc) const { return chunk_ids_.at(doc); }
  std::size_t df(const std::string& term) const;
  const std::vector<Posting>* postings(const std::string& term) const;
  const Bm25Params& params() const noexcept { return params_; }

 private:
  Bm25Params params_;
  std::string store_fingerprint_;
  std::vector<std::string> chunk_ids_;
  std::vector<std::uint32_t> lengths_;
  double avg_length_ = 0.0;
  std::map<std::string, std::vector<Posting>> postings_;
};

enum class RankStage { kBm25, kReranked };
std::string_view to_string(RankStage stage);

struct RankedChunk {
  std::string chunk_id;
  double score = 0.0;
  RankStage stage = RankStage::kBm25;

  friend bool operator==(const RankedChunk&, const RankedChunk&) = default;
};

// Top-k chunks by BM25, descending score, ties by ascending chunk_id. Chunks
// sharing no term with the query are never returned.
std::vector<RankedChunk> bm25_search(const Bm25Index& index, std::string_view query, std::size_t k);

using Embedding = std::vector<double>;

// Text embedding provider. Implementations must be thread-safe.
class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual std::vector<Embedding> embed(const std::vector<std::string>& texts) = 0;
  virtual std::string id() const = 0;
};

// POST {"texts": [...]} -> {"embeddings": [[...], ...]}.
class HttpEmbedder final : public Embedder {
 public:
  explicit HttpEmbedder(std::string endpoint, int timeout_seconds = 60);
  std::vector<Embedding> embed(const std::vector<std::string>& texts) override;
  std::string id() const override { return "http:" + endpoint_; }

 private:
  std::string endpoint_;
  int timeout_seconds_;
};

// Offline embedder: feature-hashed bag of BM25 terms. Deterministic.
class HashingEmbedder final : public Embedder {
 public:
  explicit HashingEmbedder(std::size_t dim = 512) : dim_(dim) {}
  std::vector<Embedding> embed(const std::vector<std::string>& texts) override;
  std::string id() const override { return "hash:" + std::to_string(dim_); }

 private:
  std::size_t dim_;
};

// Cosine similarity in [-1, 1]; 0 when either vector has zero norm.
double cosine_similarity(const Embedding& a, const Embedding& b);

struct RetrievalConfig {
  std::size_t first_stage_k = 10;
  std::size_t final_m = 5;
  std::string query_prefix = "query: ";
  std::string passage_prefix = "passage: ";
  std::string embed_endpoint;

  void validate() const;
  nlohmann::json to_json() const;
};

// Embeds query and candidates, orders candidates by descending cosine
// similarity (stable over input order) and keeps the top final_m.
std::vector<RankedChunk> rerank(std::string_view query, const std::vector<corpus::DocumentChunk>& candidates,
                                const RetrievalConfig& cfg, Embedder& embedder);

// The evidence set conditioning with-context scoring.
struct EvidenceSet {
  std::vector<corpus::DocumentChunk> chunks;
  std::vector<RankedChunk> first_stage;
  std::vector<RankedChunk> reranked;
  RetrievalConfig config;
  std::string embedder_id;

  bool empty() const noexcept { return chunks.empty(); }
  nlohmann::json to_json() const;
};

EvidenceSet retrieve(std::string_view question, const Bm25Index& index, const corpus::ChunkStore& store,
                     const RetrievalConfig& cfg, Embedder& embedder);

}  // namespace refind::retrieval
