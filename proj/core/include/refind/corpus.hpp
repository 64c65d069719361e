#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

#include "refind/spans.hpp"

namespace refind::corpus {

inline constexpr int kStoreFormatVersion = 1;
inline constexpr const char* kChunksFile = "chunks.jsonl";
inline constexpr const char* kManifestFile = "manifest.json";

struct RawDocument {
  std::string doc_id;
  std::string title;
  std::string body;
  std::string lang;
};

struct DocumentChunk {
  std::string chunk_id;  // "<doc_id>#<ordinal>"
  std::string doc_id;
  std::string text;      // == body slice at char_range
  CharRange char_range;  // scalar-value offsets into the document body
  std::string lang;

  friend bool operator==(const DocumentChunk&, const DocumentChunk&) = default;
};

// Word-window chunking. Words are maximal runs of non-whitespace.
struct ChunkingConfig {
  std::size_t target_window = 100;
  std::size_t stride = 100;
  std::size_t max_chars = 2000;

  void validate() const;
  friend bool operator==(const ChunkingConfig&, const ChunkingConfig&) = default;
};

// Splits a document body into chunks of `target_window` words advancing by
// `stride` words. Boundaries never fall inside a word unless a single word is
// longer than `max_chars`. A chunk extends from its first word to the start
// of the word that follows its last word, so with stride == target_window the
// chunks tile the whole body.
std::vector<DocumentChunk> chunk_document(const RawDocument& doc, const ChunkingConfig& cfg);

// Reads line-delimited {"doc_id", "title", "text", "lang"} records.
std::vector<RawDocument> read_corpus(const std::filesystem::path& path);

struct IngestStats {
  std::size_t docs = 0;
  std::size_t chunks = 0;
};

// Read-only view of a persisted chunk store. Safe to share across threads.
class ChunkStore {
 public:
  static ChunkStore open(const std::filesystem::path& dir);

  const DocumentChunk& get_chunk(const std::string& chunk_id) const;
  bool contains(const std::string& chunk_id) const { return index_.contains(chunk_id); }

  const std::vector<DocumentChunk>& chunks() const noexcept { return chunks_; }
  std::size_t size() const noexcept { return chunks_.size(); }
  const ChunkingConfig& config() const noexcept { return config_; }
  const std::string& lang() const noexcept { return lang_; }
  std::size_t doc_count() const noexcept { return doc_count_; }
  const std::filesystem::path& path() const noexcept { return dir_; }

 private:
  std::filesystem::path dir_;
  ChunkingConfig config_;
  std::string lang_;
  std::size_t doc_count_ = 0;
  std::vector<DocumentChunk> chunks_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct IngestResult {
  ChunkStore store;
  IngestStats stats;
};

// Chunks every document and writes `chunks.jsonl` plus `manifest.json` into
// `store_dir` (created if missing). Output bytes depend only on the inputs.
IngestResult ingest_corpus(const std::vector<RawDocument>& docs, const ChunkingConfig& cfg,
                           const std::filesystem::path& store_dir);

}  // namespace refind::corpus
