#include "refind/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

#include <fmt/format.h>

#include "refind/error.hpp"
#include "refind/hash.hpp"
#include "refind/http.hpp"
#include "refind/io.hpp"
#include "refind/text.hpp"

namespace refind::retrieval {

using nlohmann::json;

std::vector<std::string> tokenize(std::string_view utf8) {
  std::vector<std::string> terms;
  std::u32string current;
  for (char32_t c : text::decode(utf8)) {
    if (text::is_alnum(c)) {
      current.push_back(text::to_lower(c));
    } else if (!current.empty()) {
      terms.push_back(text::encode(current));
      current.clear();
    }
  }
  if (!current.empty()) terms.push_back(text::encode(current));
  return terms;
}

void Bm25Params::validate() const {
  if (!(k1 >= 0.0)) throw ValidationError("bm25 k1 must be >= 0");
  if (!(b >= 0.0 && b <= 1.0)) throw ValidationError("bm25 b must lie in [0, 1]");
}

double bm25_idf(std::size_t n_docs, std::size_t df) {
  const auto n = static_cast<double>(n_docs);
  const auto d = static_cast<double>(df);
  return std::log(1.0 + (n - d + 0.5) / (d + 0.5));
}

namespace {

constexpr int kIndexFormatVersion = 1;

std::string store_fingerprint(const corpus::ChunkStore& store) {
  std::string blob;
  for (const auto& c : store.chunks()) {
    blob += c.chunk_id;
    blob += '\x1f';
    blob += c.text;
    blob += '\x1e';
  }
  return hex64(fnv1a64(blob));
}

}  // namespace

Bm25Index Bm25Index::build(const corpus::ChunkStore& store, const Bm25Params& params) {
  params.validate();
  if (store.size() == 0) throw ValidationError("cannot build a BM25 index over an empty store");
  Bm25Index index;
  index.params_ = params;
  index.store_fingerprint_ = store_fingerprint(store);
  std::uint64_t total = 0;
  for (std::uint32_t doc = 0; doc < store.size(); ++doc) {
    const auto& chunk = store.chunks()[doc];
    const auto terms = tokenize(chunk.text);
    std::map<std::string, std::uint32_t> tf;
    for (const auto& t : terms) ++tf[t];
    for (const auto& [term, count] : tf) index.postings_[term].push_back({doc, count});
    index.chunk_ids_.push_back(chunk.chunk_id);
    index.lengths_.push_back(static_cast<std::uint32_t>(terms.size()));
    total += terms.size();
  }
  index.avg_length_ = static_cast<double>(total) / static_cast<double>(store.size());
  return index;
}

std::size_t Bm25Index::df(const std::string& term) const {
  const auto* p = postings(term);
  return p ? p->size() : 0;
}

const std::vector<Posting>* Bm25Index::postings(const std::string& term) const {
  const auto it = postings_.find(term);
  return it == postings_.end() ? nullptr : &it->second;
}

std::string Bm25Index::serialize() const {
  json postings = json::object();
  for (const auto& [term, list] : postings_) {
    json arr = json::array();
    for (const auto& p : list) arr.push_back(json::array({p.doc, p.tf}));
    postings[term] = std::move(arr);
  }
  json j{{"format", "refind-bm25"},
         {"format_version", kIndexFormatVersion},
         {"params", {{"k1", params_.k1}, {"b", params_.b}}},
         {"store_fingerprint", store_fingerprint_},
         {"chunk_ids", chunk_ids_},
         {"lengths", lengths_},
         {"avg_length", avg_length_},
         {"postings", std::move(postings)}};
  return io::dump(j) + "\n";
}

void Bm25Index::save(const std::filesystem::path& path) const { io::write_file_atomic(path, serialize()); }

Bm25Index Bm25Index::load(const std::filesystem::path& path, const corpus::ChunkStore& store) {
  Bm25Index index;
  try {
    const auto j = json::parse(io::read_file(path));
    if (j.at("format_version").get<int>() != kIndexFormatVersion) {
      throw DataError(fmt::format("{}: unsupported index format version", path.string()));
    }
    index.params_.k1 = j.at("params").at("k1").get<double>();
    index.params_.b = j.at("params").at("b").get<double>();
    index.store_fingerprint_ = j.at("store_fingerprint").get<std::string>();
    index.chunk_ids_ = j.at("chunk_ids").get<std::vector<std::string>>();
    index.lengths_ = j.at("lengths").get<std::vector<std::uint32_t>>();
    index.avg_length_ = j.at("avg_length").get<double>();
    for (const auto& [term, arr] : j.at("postings").items()) {
      auto& list = index.postings_[term];
      for (const auto& p : arr) list.push_back({p.at(0).get<std::uint32_t>(), p.at(1).get<std::uint32_t>()});
    }
  } catch (const json::exception& e) {
    throw DataError(fmt::format("{}: malformed index: {}", path.string(), e.what()));
  }
  if (index.store_fingerprint_ != store_fingerprint(store)) {
    throw DataError(fmt::format("{}: index is stale for store {}; rebuild it", path.string(), store.path().string()));
  }
  return index;
}

std::string_view to_string(RankStage stage) { return stage == RankStage::kBm25 ? "bm25" : "reranked"; }

std::vector<RankedChunk> bm25_search(const Bm25Index& index, std::string_view query, std::size_t k) {
  if (k < 1) throw ValidationError("bm25_search requires k >= 1");
  auto terms = tokenize(query);
  if (terms.empty()) throw ValidationError("query has no searchable terms");
  // Each distinct query term contributes once.
  std::vector<std::string> unique_terms;
  std::unordered_set<std::string> seen;
  for (auto& t : terms) {
    if (seen.insert(t).second) unique_terms.push_back(std::move(t));
  }

  const auto& p = index.params();
  const auto n = index.doc_count();
  std::unordered_map<std::uint32_t, double> scores;
  for (const auto& term : unique_terms) {
    const auto* list = index.postings(term);
    if (!list) continue;
    const double idf = bm25_idf(n, list->size());
    for (const auto& post : *list) {
      const double tf = post.tf;
      const double norm = p.k1 * (1.0 - p.b + p.b * static_cast<double>(index.length(post.doc)) / index.avg_length());
      scores[post.doc] += idf * tf * (p.k1 + 1.0) / (tf + norm);
    }
  }

  std::vector<RankedChunk> ranked;
  ranked.reserve(scores.size());
  for (const auto& [doc, score] : scores) ranked.push_back({index.chunk_id(doc), score, RankStage::kBm25});
  const auto better = [](const RankedChunk& a, const RankedChunk& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.chunk_id < b.chunk_id;
  };
  if (ranked.size() > k) {
    std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(k), ranked.end(), better);
    ranked.resize(k);
  } else {
    std::sort(ranked.begin(), ranked.end(), better);
  }
  return ranked;
}

HttpEmbedder::HttpEmbedder(std::string endpoint, int timeout_seconds)
    : endpoint_(std::move(endpoint)), timeout_seconds_(timeout_seconds) {}

std::vector<Embedding> HttpEmbedder::embed(const std::vector<std::string>& texts) {
  const auto reply = http::post_json(endpoint_, json{{"texts", texts}}, timeout_seconds_);
  std::vector<Embedding> out;
  try {
    out = reply.at("embeddings").get<std::vector<Embedding>>();
  } catch (const json::exception& e) {
    throw ProtocolError(fmt::format("{}: malformed embedding reply: {}", endpoint_, e.what()));
  }
  if (out.size() != texts.size()) {
    throw ProtocolError(fmt::format("{}: asked for {} embeddings, got {}", endpoint_, texts.size(), out.size()));
  }
  return out;
}

std::vector<Embedding> HashingEmbedder::embed(const std::vector<std::string>& texts) {
  std::vector<Embedding> out;
  out.reserve(texts.size());
  for (const auto& t : texts) {
    Embedding v(dim_, 0.0);
    for (const auto& term : tokenize(t)) v[fnv1a64(term) % dim_] += 1.0;
    out.push_back(std::move(v));
  }
  return out;
}

double cosine_similarity(const Embedding& a, const Embedding& b) {
  if (a.size() != b.size()) {
    throw ProtocolError(fmt::format("embedding dimension mismatch: {} vs {}", a.size(), b.size()));
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

void RetrievalConfig::validate() const {
  if (final_m < 1 || final_m > first_stage_k) {
    throw ValidationError(
        fmt::format("retrieval requires 1 <= final_m <= first_stage_k (got m={}, k={})", final_m, first_stage_k));
  }
}

json RetrievalConfig::to_json() const {
  return json{{"first_stage_k", first_stage_k},
              {"final_m", final_m},
              {"query_prefix", query_prefix},
              {"passage_prefix", passage_prefix},
              {"embed_endpoint", embed_endpoint}};
}

std::vector<RankedChunk> rerank(std::string_view query, const std::vector<corpus::DocumentChunk>& candidates,
                                const RetrievalConfig& cfg, Embedder& embedder) {
  cfg.validate();
  if (candidates.empty()) throw ValidationError("rerank needs at least one candidate");
  std::vector<std::string> texts;
  texts.reserve(candidates.size() + 1);
  texts.push_back(cfg.query_prefix + std::string(query));
  for (const auto& c : candidates) texts.push_back(cfg.passage_prefix + c.text);

  const auto vectors = embedder.embed(texts);
  if (vectors.size() != texts.size()) {
    throw ProtocolError(fmt::format("embedder returned {} vectors for {} texts", vectors.size(), texts.size()));
  }
  const auto dim = vectors.front().size();
  for (const auto& v : vectors) {
    if (v.size() != dim) throw ProtocolError(fmt::format("embedding dimension mismatch: {} vs {}", dim, v.size()));
  }

  std::vector<RankedChunk> ranked;
  ranked.reserve(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    ranked.push_back({candidates[i].chunk_id, cosine_similarity(vectors[0], vectors[i + 1]), RankStage::kReranked});
  }
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const RankedChunk& a, const RankedChunk& b) { return a.score > b.score; });
  ranked.resize(std::min(cfg.final_m, ranked.size()));
  return ranked;
}

namespace {

json ranked_to_json(const std::vector<RankedChunk>& ranked) {
  json arr = json::array();
  for (const auto& r : ranked) {
    arr.push_back({{"chunk_id", r.chunk_id}, {"score", r.score}, {"stage", std::string(to_string(r.stage))}});
  }
  return arr;
}

}  // namespace

json EvidenceSet::to_json() const {
  json chunk_arr = json::array();
  for (const auto& c : chunks) {
    chunk_arr.push_back({{"chunk_id", c.chunk_id}, {"doc_id", c.doc_id}, {"text", c.text}});
  }
  return json{{"chunks", std::move(chunk_arr)},
              {"first_stage", ranked_to_json(first_stage)},
              {"reranked", ranked_to_json(reranked)},
              {"config", config.to_json()},
              {"embedder", embedder_id}};
}

EvidenceSet retrieve(std::string_view question, const Bm25Index& index, const corpus::ChunkStore& store,
                     const RetrievalConfig& cfg, Embedder& embedder) {
  cfg.validate();
  EvidenceSet evidence;
  evidence.config = cfg;
  evidence.embedder_id = embedder.id();
  evidence.first_stage = bm25_search(index, question, cfg.first_stage_k);
  if (evidence.first_stage.empty()) return evidence;

  std::vector<corpus::DocumentChunk> candidates;
  candidates.reserve(evidence.first_stage.size());
  for (const auto& r : evidence.first_stage) candidates.push_back(store.get_chunk(r.chunk_id));
  evidence.reranked = rerank(question, candidates, cfg, embedder);
  for (const auto& r : evidence.reranked) evidence.chunks.push_back(store.get_chunk(r.chunk_id));
  return evidence;
}

}  // namespace refind::retrieval
