#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "refind/error.hpp"
#include "refind/retrieval.hpp"
#include "support/oracles.hpp"
#include "support/support.hpp"

namespace refind {
namespace {

using retrieval::Bm25Index;
using retrieval::Embedding;
using retrieval::RankStage;

// Maps each text to a fixed vector chosen by the test.
class TableEmbedder final : public retrieval::Embedder {
 public:
  explicit TableEmbedder(std::map<std::string, Embedding> table) : table_(std::move(table)) {}
  std::vector<Embedding> embed(const std::vector<std::string>& texts) override {
    std::vector<Embedding> out;
    for (const auto& t : texts) out.push_back(table_.at(t));
    return out;
  }
  std::string id() const override { return "table"; }

 private:
  std::map<std::string, Embedding> table_;
};

TEST(Tokenize, LowercasesAndSplitsOnNonAlnum) {
  EXPECT_EQ(retrieval::tokenize("Hello, World! x-y"), (std::vector<std::string>{"hello", "world", "x", "y"}));
  EXPECT_EQ(retrieval::tokenize("Город ВЕДРИН"), (std::vector<std::string>{"город", "ведрин"}));
  EXPECT_TRUE(retrieval::tokenize(" ?! ").empty());
}

TEST(Bm25, ToyCorpusStatistics) {
  test::TempDir dir("bm25");
  const auto store = test::make_store(dir.path(), {"a b", "a a", "c"});
  const auto index = Bm25Index::build(store);
  EXPECT_EQ(index.doc_count(), 3u);
  EXPECT_EQ(index.df("a"), 2u);
  EXPECT_EQ(index.df("c"), 1u);
  EXPECT_EQ(index.df("zzz"), 0u);
  EXPECT_DOUBLE_EQ(index.avg_length(), 5.0 / 3.0);
}

TEST(Bm25, ToyCorpusRanking) {
  test::TempDir dir("bm25r");
  const auto store = test::make_store(dir.path(), {"a b", "a a", "c"});
  const auto index = Bm25Index::build(store);
  const auto hits = retrieval::bm25_search(index, "a", 3);
  ASSERT_EQ(hits.size(), 2u);
  EXPECT_EQ(hits[0].chunk_id, "d2#0");
  EXPECT_EQ(hits[1].chunk_id, "d1#0");
  EXPECT_EQ(hits[0].stage, RankStage::kBm25);

  // Hand evaluation with k1 = 1.2, b = 0.75, avgdl = 5/3, idf = ln(1 + 1.5/2.5).
  const double idf = std::log(1.0 + 1.5 / 2.5);
  const double s2 = idf * (2 * 2.2) / (2 + 1.2 * (0.25 + 0.75 * 2 / (5.0 / 3.0)));
  const double s1 = idf * (1 * 2.2) / (1 + 1.2 * (0.25 + 0.75 * 2 / (5.0 / 3.0)));
  EXPECT_NEAR(hits[0].score, s2, 1e-12);
  EXPECT_NEAR(hits[1].score, s1, 1e-12);

  const auto top1 = retrieval::bm25_search(index, "a", 1);
  ASSERT_EQ(top1.size(), 1u);
  EXPECT_EQ(top1[0].chunk_id, "d2#0");
  EXPECT_TRUE(retrieval::bm25_search(index, "absent", 3).empty());
  EXPECT_THROW(retrieval::bm25_search(index, "...", 3), ValidationError);
  EXPECT_THROW(retrieval::bm25_search(index, "a", 0), ValidationError);
}

TEST(Bm25, SingleChunkAverageLength) {
  test::TempDir dir("bm25s");
  const auto index = Bm25Index::build(test::make_store(dir.path(), {"x y z w"}));
  EXPECT_DOUBLE_EQ(index.avg_length(), 4.0);
}

TEST(Bm25, TiesBreakByChunkId) {
  test::TempDir dir("bm25t");
  const auto index = Bm25Index::build(test::make_store(dir.path(), {"q z", "q z", "q z"}));
  const auto hits = retrieval::bm25_search(index, "q", 3);
  ASSERT_EQ(hits.size(), 3u);
  EXPECT_EQ(hits[0].chunk_id, "d1#0");
  EXPECT_EQ(hits[1].chunk_id, "d2#0");
  EXPECT_EQ(hits[2].chunk_id, "d3#0");
}

TEST(Bm25, PersistenceIsReloadIdentical) {
  test::TempDir dir("bm25p");
  const auto store = test::make_store(dir.path(), {"a b", "a a", "c"});
  const auto index = Bm25Index::build(store);
  EXPECT_EQ(index.serialize(), Bm25Index::build(store).serialize());
  index.save(dir / retrieval::kIndexFile);
  const auto loaded = Bm25Index::load(dir / retrieval::kIndexFile, store);
  EXPECT_EQ(loaded.serialize(), index.serialize());
  EXPECT_EQ(retrieval::bm25_search(loaded, "a b", 3), retrieval::bm25_search(index, "a b", 3));
}

TEST(Bm25, StaleIndexIsRejected) {
  test::TempDir a("stale-a"), b("stale-b");
  const auto store_a = test::make_store(a.path(), {"a b", "c"});
  const auto store_b = test::make_store(b.path(), {"a b", "d"});
  Bm25Index::build(store_a).save(a / retrieval::kIndexFile);
  EXPECT_THROW(Bm25Index::load(a / retrieval::kIndexFile, store_b), DataError);
}

TEST(Bm25, MonotoneInTermFrequency) {
  std::mt19937 rng(11);
  for (int iter = 0; iter < 200; ++iter) {
    test::TempDir dir("mono");
    std::vector<std::string> docs;
    for (int d = 0; d < 4; ++d) {
      std::string s = "filler";
      for (int w = 0; w < static_cast<int>(rng() % 5); ++w) s += " t";
      docs.push_back(s);
    }
    const auto score = [&](const std::vector<std::string>& texts) {
      test::TempDir sub("mono-sub");
      const auto idx = Bm25Index::build(test::make_store(sub.path(), texts));
      for (const auto& h : retrieval::bm25_search(idx, "t", 10)) {
        if (h.chunk_id == "d1#0") return h.score;
      }
      return 0.0;
    };
    // Doc 0 trades its filler word for one more "t": same length, higher tf.
    auto same_len = docs;
    same_len[0].replace(0, 6, "t");
    EXPECT_GE(score(same_len) + 1e-15, score(docs));
  }
}

TEST(Rerank, OrthogonalStub) {
  const std::vector<corpus::DocumentChunk> cands = {{"b#0", "b", "B", {0, 1}, "en"}, {"a#0", "a", "A", {0, 1}, "en"}};
  TableEmbedder emb({{"query: q", {1, 0}}, {"passage: A", {2, 0}}, {"passage: B", {0, 3}}});
  retrieval::RetrievalConfig cfg;
  const auto out = retrieval::rerank("q", cands, cfg, emb);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[0].chunk_id, "a#0");
  EXPECT_DOUBLE_EQ(out[0].score, 1.0);
  EXPECT_EQ(out[1].chunk_id, "b#0");
  EXPECT_DOUBLE_EQ(out[1].score, 0.0);
  EXPECT_EQ(out[0].stage, RankStage::kReranked);
}

TEST(Rerank, SingleCandidateAndCardinality) {
  retrieval::HashingEmbedder emb;
  retrieval::RetrievalConfig cfg;
  const std::vector<corpus::DocumentChunk> one = {{"x#0", "x", "unrelated", {0, 9}, "en"}};
  EXPECT_EQ(retrieval::rerank("query words", one, cfg, emb).size(), 1u);

  std::vector<corpus::DocumentChunk> ten;
  for (int i = 0; i < 10; ++i) {
    ten.push_back({"c#" + std::to_string(i), "c", "text number " + std::to_string(i), {0, 1}, "en"});
  }
  const auto out = retrieval::rerank("text 3", ten, cfg, emb);
  ASSERT_EQ(out.size(), 5u);
  std::set<std::string> ids;
  for (const auto& r : out) {
    ids.insert(r.chunk_id);
    EXPECT_GE(r.score, -1.0);
    EXPECT_LE(r.score, 1.0);
  }
  EXPECT_EQ(ids.size(), 5u);
  for (const auto& id : ids) EXPECT_EQ(id.substr(0, 2), "c#");
}

TEST(Rerank, TiesKeepFirstStageOrder) {
  TableEmbedder emb({{"query: q", {1, 1}}, {"passage: same", {1, 1}}});
  std::vector<corpus::DocumentChunk> cands;
  for (const char* id : {"z#0", "m#0", "a#0"}) cands.push_back({id, "d", "same", {0, 4}, "en"});
  const auto out = retrieval::rerank("q", cands, {}, emb);
  ASSERT_EQ(out.size(), 3u);
  EXPECT_EQ(out[0].chunk_id, "z#0");
  EXPECT_EQ(out[1].chunk_id, "m#0");
  EXPECT_EQ(out[2].chunk_id, "a#0");
}

TEST(Rerank, DimensionMismatchIsProtocolError) {
  TableEmbedder emb({{"query: q", {1, 0}}, {"passage: A", {1, 0, 0}}});
  const std::vector<corpus::DocumentChunk> cands = {{"a#0", "a", "A", {0, 1}, "en"}};
  EXPECT_THROW(retrieval::rerank("q", cands, {}, emb), ProtocolError);
  EXPECT_THROW(retrieval::cosine_similarity({1, 0}, {1, 0, 0}), ProtocolError);
}

TEST(Retrieve, EmptyAndDegenerateCases) {
  test::TempDir dir("ret");
  const auto store = test::make_store(dir.path(), {"alpha beta", "beta gamma", "delta"});
  const auto index = Bm25Index::build(store);
  retrieval::HashingEmbedder emb;
  retrieval::RetrievalConfig cfg;
  EXPECT_TRUE(retrieval::retrieve("omega", index, store, cfg, emb).empty());

  cfg.first_stage_k = 1;
  cfg.final_m = 1;
  const auto ev = retrieval::retrieve("beta gamma", index, store, cfg, emb);
  ASSERT_EQ(ev.chunks.size(), 1u);
  EXPECT_EQ(ev.chunks[0].chunk_id, retrieval::bm25_search(index, "beta gamma", 1)[0].chunk_id);
  EXPECT_EQ(ev.embedder_id, "hash:512");

  const auto again = retrieval::retrieve("beta gamma", index, store, cfg, emb);
  EXPECT_EQ(ev.to_json(), again.to_json());
}

TEST(Retrieve, ConfigValidation) {
  retrieval::RetrievalConfig cfg;
  cfg.final_m = 11;
  EXPECT_THROW(cfg.validate(), ValidationError);
  cfg.final_m = 0;
  EXPECT_THROW(cfg.validate(), ValidationError);
}

// Library ranking against a scalar brute force on random micro-corpora.
TEST(Bm25, MatchesBruteForceOracle) {
  std::mt19937 rng(2024);
  const std::vector<std::string> vocab = {"a", "b", "c", "d", "e", "f", "g", "h"};
  for (int iter = 0; iter < 30; ++iter) {
    const std::size_t n = 1 + rng() % 20;
    std::vector<std::string> texts;
    std::vector<std::vector<std::string>> toks;
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<std::string> t;
      const std::size_t len = 1 + rng() % 10;
      for (std::size_t j = 0; j < len; ++j) t.push_back(vocab[rng() % vocab.size()]);
      std::string s;
      for (const auto& w : t) s += (s.empty() ? "" : " ") + w;
      texts.push_back(s);
      toks.push_back(t);
    }
    std::vector<std::string> query = {vocab[rng() % 8], vocab[rng() % 8]};
    test::TempDir dir("oracle");
    const auto index = Bm25Index::build(test::make_store(dir.path(), texts));
    const auto got = retrieval::bm25_search(index, query[0] + " " + query[1], n);
    const auto want = oracle::bm25_rank(toks, query, 1.2, 0.75);
    ASSERT_EQ(got.size(), want.size());
    for (const auto& h : got) {
      const auto doc = std::stoul(h.chunk_id.substr(1, h.chunk_id.find('#') - 1)) - 1;
      const auto it = std::find_if(want.begin(), want.end(), [&](const auto& w) { return w.doc == doc; });
      ASSERT_NE(it, want.end());
      EXPECT_NEAR(h.score, it->score, 1e-12);
    }
  }
}

}  // namespace
}  // namespace refind
