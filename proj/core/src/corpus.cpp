#include "refind/corpus.hpp"

#include <algorithm>
#include <unordered_set>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "refind/error.hpp"
#include "refind/io.hpp"
#include "refind/text.hpp"

namespace refind::corpus {

using nlohmann::json;

void ChunkingConfig::validate() const {
  if (stride == 0 || stride > target_window) {
    throw ValidationError(fmt::format("chunking stride must satisfy 0 < stride <= window (stride {}, window {})",
                                      stride, target_window));
  }
  if (max_chars < 1) throw ValidationError("chunking max_chars must be >= 1");
}

namespace {

struct Word {
  std::size_t start;
  std::size_t end;
};

std::vector<Word> split_words(const std::u32string& body) {
  std::vector<Word> words;
  std::size_t i = 0;
  while (i < body.size()) {
    while (i < body.size() && text::is_space(body[i])) ++i;
    if (i == body.size()) break;
    const auto start = i;
    while (i < body.size() && !text::is_space(body[i])) ++i;
    words.push_back({start, i});
  }
  return words;
}

json chunk_to_json(const DocumentChunk& c) {
  return json{{"chunk_id", c.chunk_id}, {"doc_id", c.doc_id}, {"lang", c.lang},
              {"start", c.char_range.start}, {"end", c.char_range.end}, {"text", c.text}};
}

DocumentChunk chunk_from_json(const json& j) {
  DocumentChunk c;
  c.chunk_id = j.at("chunk_id").get<std::string>();
  c.doc_id = j.at("doc_id").get<std::string>();
  c.lang = j.at("lang").get<std::string>();
  c.char_range = {j.at("start").get<std::size_t>(), j.at("end").get<std::size_t>()};
  c.text = j.at("text").get<std::string>();
  return c;
}

json config_to_json(const ChunkingConfig& cfg) {
  return json{{"target_window", cfg.target_window}, {"stride", cfg.stride}, {"max_chars", cfg.max_chars}};
}

}  // namespace

std::vector<DocumentChunk> chunk_document(const RawDocument& doc, const ChunkingConfig& cfg) {
  cfg.validate();
  const auto body = text::decode(doc.body);
  const auto words = split_words(body);
  if (words.empty()) throw ValidationError(fmt::format("document '{}' has an empty body", doc.doc_id));

  std::vector<DocumentChunk> out;
  auto emit = [&](std::size_t start, std::size_t end) {
    DocumentChunk c;
    c.chunk_id = fmt::format("{}#{}", doc.doc_id, out.size());
    c.doc_id = doc.doc_id;
    c.lang = doc.lang;
    c.char_range = {start, end};
    c.text = text::encode(std::u32string_view(body).substr(start, end - start));
    out.push_back(std::move(c));
  };

  const auto n_words = words.size();
  const auto word_begin = [&](std::size_t w) { return w == 0 ? std::size_t{0} : words[w].start; };
  const auto word_limit = [&](std::size_t w) { return w == n_words ? body.size() : words[w].start; };

  std::size_t s = 0;
  while (true) {
    auto e = std::min(s + cfg.target_window, n_words);
    const auto begin = word_begin(s);
    while (e > s + 1 && word_limit(e) - begin > cfg.max_chars) --e;
    const auto limit = word_limit(e);
    if (limit - begin > cfg.max_chars) {
      // A single word (with its trailing whitespace) exceeds the cap.
      for (auto p = begin; p < limit; p += cfg.max_chars) emit(p, std::min(p + cfg.max_chars, limit));
    } else {
      emit(begin, limit);
    }
    if (e == n_words) break;
    s += std::min(cfg.stride, e - s);
  }
  return out;
}

std::vector<RawDocument> read_corpus(const std::filesystem::path& path) {
  std::vector<RawDocument> docs;
  std::size_t n = 0;
  for (const auto& j : io::read_jsonl(path)) {
    ++n;
    try {
      RawDocument d;
      d.doc_id = j.at("doc_id").get<std::string>();
      d.title = j.value("title", std::string{});
      d.body = j.at("text").get<std::string>();
      d.lang = j.value("lang", std::string{});
      docs.push_back(std::move(d));
    } catch (const json::exception& e) {
      throw DataError(fmt::format("{}: record {}: {}", path.string(), n, e.what()));
    }
  }
  return docs;
}

ChunkStore ChunkStore::open(const std::filesystem::path& dir) {
  ChunkStore store;
  store.dir_ = dir;
  json manifest;
  try {
    manifest = json::parse(io::read_file(dir / kManifestFile));
  } catch (const json::exception& e) {
    throw DataError(fmt::format("{}: malformed manifest: {}", (dir / kManifestFile).string(), e.what()));
  }
  try {
    if (manifest.at("format_version").get<int>() != kStoreFormatVersion) {
      throw DataError(fmt::format("{}: unsupported store format version", dir.string()));
    }
    const auto& cfg = manifest.at("config");
    store.config_.target_window = cfg.at("target_window").get<std::size_t>();
    store.config_.stride = cfg.at("stride").get<std::size_t>();
    store.config_.max_chars = cfg.at("max_chars").get<std::size_t>();
    store.lang_ = manifest.at("lang").get<std::string>();
    store.doc_count_ = manifest.at("doc_count").get<std::size_t>();
    for (const auto& j : io::read_jsonl(dir / kChunksFile)) store.chunks_.push_back(chunk_from_json(j));
    if (store.chunks_.size() != manifest.at("chunk_count").get<std::size_t>()) {
      throw DataError(fmt::format("{}: chunk count disagrees with manifest", dir.string()));
    }
  } catch (const json::exception& e) {
    throw DataError(fmt::format("{}: {}", dir.string(), e.what()));
  }
  for (std::size_t i = 0; i < store.chunks_.size(); ++i) {
    if (!store.index_.emplace(store.chunks_[i].chunk_id, i).second) {
      throw DuplicateIdError(store.chunks_[i].chunk_id);
    }
  }
  return store;
}

const DocumentChunk& ChunkStore::get_chunk(const std::string& chunk_id) const {
  const auto it = index_.find(chunk_id);
  if (it == index_.end()) throw NotFoundError(fmt::format("chunk '{}' not found in {}", chunk_id, dir_.string()));
  return chunks_[it->second];
}

IngestResult ingest_corpus(const std::vector<RawDocument>& docs, const ChunkingConfig& cfg,
                           const std::filesystem::path& store_dir) {
  cfg.validate();
  std::unordered_set<std::string> seen;
  std::string lang;
  bool mixed = false;
  std::string chunks_blob;
  IngestStats stats;
  for (const auto& d : docs) {
    if (!seen.insert(d.doc_id).second) throw DuplicateIdError(d.doc_id);
    if (stats.docs == 0) {
      lang = d.lang;
    } else if (d.lang != lang) {
      mixed = true;
    }
    for (const auto& c : chunk_document(d, cfg)) {
      chunks_blob += io::dump(chunk_to_json(c));
      chunks_blob += '\n';
      ++stats.chunks;
    }
    ++stats.docs;
  }

  json manifest{{"format", "refind-chunk-store"},
                {"format_version", kStoreFormatVersion},
                {"config", config_to_json(cfg)},
                {"lang", mixed ? std::string("mul") : lang},
                {"doc_count", stats.docs},
                {"chunk_count", stats.chunks}};

  std::error_code ec;
  std::filesystem::create_directories(store_dir, ec);
  if (ec) throw IoError(fmt::format("cannot create store directory {}: {}", store_dir.string(), ec.message()));
  io::write_file_atomic(store_dir / kChunksFile, chunks_blob);
  io::write_file_atomic(store_dir / kManifestFile, io::dump(manifest) + "\n");
  return {ChunkStore::open(store_dir), stats};
}

}  // namespace refind::corpus
