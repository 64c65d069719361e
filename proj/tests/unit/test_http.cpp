#include <thread>

#include <httplib.h>
#include <gtest/gtest.h>

#include "refind/diff_spans.hpp"
#include "refind/error.hpp"
#include "refind/http.hpp"
#include "refind/lm_scoring.hpp"
#include "refind/retrieval.hpp"
#include "support/support.hpp"

namespace refind {
namespace {

using nlohmann::json;

// Local stub server on an ephemeral port, stopped on destruction.
class StubServer {
 public:
  StubServer() {
    server_.Post("/score", [this](const httplib::Request& req, httplib::Response& res) {
      last_body = json::parse(req.body);
      const auto n = last_body.at("continuation_tokens").size();
      json lps = json::array();
      for (std::size_t i = 0; i < n; ++i) lps.push_back(-0.5 * static_cast<double>(i + 1));
      res.set_content(json{{"logprobs", lps}}.dump(), "application/json");
    });
    server_.Post("/short", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(R"({"logprobs":[-0.1,-0.2,-0.3]})", "application/json");
    });
    server_.Post("/embed", [](const httplib::Request& req, httplib::Response& res) {
      const auto body = json::parse(req.body);
      json vecs = json::array();
      for (const auto& t : body.at("texts")) {
        const auto s = t.get<std::string>();
        vecs.push_back(json::array({static_cast<double>(s.size()), s.find("cat") != std::string::npos ? 5.0 : 0.0}));
      }
      res.set_content(json{{"embeddings", vecs}}.dump(), "application/json");
    });
    server_.Post("/edit", [this](const httplib::Request& req, httplib::Response& res) {
      last_body = json::parse(req.body);
      res.set_content(R"({"text":"debuted in 2012"})", "application/json");
    });
    server_.Post("/garbage", [](const httplib::Request&, httplib::Response& res) {
      res.set_content("not json", "text/plain");
    });
    server_.Post("/bad", [](const httplib::Request&, httplib::Response& res) { res.status = 400; });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~StubServer() {
    server_.stop();
    thread_.join();
  }

  std::string url(const std::string& path) const { return "http://127.0.0.1:" + std::to_string(port_) + path; }

  json last_body;

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

// A port nobody listens on.
std::string dead_url() {
  httplib::Server s;
  const int port = s.bind_to_any_port("127.0.0.1");
  return "http://127.0.0.1:" + std::to_string(port) + "/score";
}

TEST(Http, ScoringProtocol) {
  StubServer stub;
  lm::HttpScoringBackend backend(stub.url("/score"), 5, 0);
  const auto s = lm::score_continuation(backend, {"r", "prompt text", {"a", "b", "c"}});
  EXPECT_EQ(s.values, (std::vector<double>{-0.5, -1.0, -1.5}));
  EXPECT_EQ(stub.last_body.at("prompt"), "prompt text");
  EXPECT_EQ(stub.last_body.at("continuation_tokens"), json({"a", "b", "c"}));
  EXPECT_EQ(s.backend_id, backend.id());
}

TEST(Http, ShortReplyIsAnAlignmentError) {
  StubServer stub;
  lm::HttpScoringBackend backend(stub.url("/short"), 5, 0);
  EXPECT_THROW(lm::score_continuation(backend, {"r", "p", {"a", "b", "c", "d"}}), AlignmentError);
}

TEST(Http, ProtocolFailures) {
  StubServer stub;
  EXPECT_THROW(http::post_json(stub.url("/garbage"), json::object(), 5), ProtocolError);
  EXPECT_THROW(http::post_json(stub.url("/bad"), json::object(), 5), ProtocolError);
  lm::HttpScoringBackend wrong_shape(stub.url("/edit"), 5, 0);
  EXPECT_THROW(wrong_shape.logprobs({"r", "p", {"a"}}), ProtocolError);
  EXPECT_THROW(http::post_json("https://example.invalid/x", json::object(), 5), ValidationError);
}

TEST(Http, UnreachableEndpointIsATransportError) {
  lm::HttpScoringBackend backend(dead_url(), 2, 1);
  EXPECT_THROW(backend.logprobs({"r", "p", {"a"}}), TransportError);
}

TEST(Http, EmbeddingRerank) {
  StubServer stub;
  test::TempDir dir("http-embed");
  const auto store = test::make_store(dir.path(), {"dog dog bird", "cat dog", "dog"});
  const auto index = retrieval::Bm25Index::build(store);
  retrieval::HttpEmbedder embedder(stub.url("/embed"), 5);
  retrieval::RetrievalConfig cfg;
  cfg.first_stage_k = 3;
  cfg.final_m = 2;
  const auto ev = retrieval::retrieve("dog", index, store, cfg, embedder);
  ASSERT_EQ(ev.chunks.size(), 2u);
  EXPECT_EQ(ev.reranked.size(), 2u);
  EXPECT_EQ(ev.embedder_id, embedder.id());
  EXPECT_EQ(embedder.embed({"a", "b"}).size(), 2u);
}

TEST(Http, EditorRoundTrip) {
  StubServer stub;
  diff::HttpEditor editor(stub.url("/edit"), 5, 0);
  EXPECT_EQ(editor.edit("r", "the prompt"), "debuted in 2012");
  EXPECT_EQ(stub.last_body.at("prompt"), "the prompt");
}

TEST(Http, CliDetectWithUnreachableScorerFailsWithoutArtifact) {
  test::TempDir dir("http-cli");
  const auto out = dir / "pred.jsonl";
  const auto r = test::run_cli({"detect", "--dataset", (test::fixture_dir() / "case_study" / "dataset.jsonl").string(),
                                "--out", out.string(), "--backend", "http", "--score-url", dead_url(), "--retries",
                                "0", "--timeout", "2"});
  EXPECT_NE(r.code, 0);
  EXPECT_FALSE(std::filesystem::exists(out));
  EXPECT_NE(r.err.find("transport"), std::string::npos) << r.err;
}

}  // namespace
}  // namespace refind
