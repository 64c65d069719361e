#include "cli.hpp"

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <memory>
#include <optional>
#include <map>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "refind/corpus.hpp"
#include "refind/csr.hpp"
#include "refind/dataset.hpp"
#include "refind/diff_spans.hpp"
#include "refind/error.hpp"
#include "refind/evaluation.hpp"
#include "refind/hash.hpp"
#include "refind/io.hpp"
#include "refind/lm_scoring.hpp"
#include "refind/pipeline.hpp"
#include "refind/retrieval.hpp"

namespace refind::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kRunConfigVersion = 1;

struct EvidenceOptions {
  std::string store;
  std::size_t k = 10;
  std::size_t m = 5;
  std::string embed_url;
  std::string embedder;  // "http" or "hash"; empty = http when a URL is known
  std::string query_prefix = "query: ";
  std::string passage_prefix = "passage: ";
  int timeout = 60;
};

struct BackendOptions {
  std::string backend = "file";
  std::string score_url;
  std::string recordings;
  std::string toy_train;
  bool toy_fixed = false;
  int timeout = 120;
  int retries = 2;
};

struct Options {
  bool dry_run = false;
  std::size_t parallelism = 1;

  // index
  std::string corpus;
  std::string index_out;
  corpus::ChunkingConfig chunking;
  retrieval::Bm25Params bm25;

  // retrieve
  std::string question;

  // detect / sweep / detect-diff / eval / normalize
  std::string dataset;
  std::string out;
  std::string errors_out;
  double delta = csr::kDefaultDelta;
  double epsilon = csr::kDefaultEpsilon;
  bool no_merge_whitespace = false;
  std::string deltas = "0.1,0.2,0.3,0.4";
  std::string pred;
  std::string gold;
  std::string label = "REFIND";
  std::string table_out;
  std::string edited;
  std::string editor_url;
  std::size_t merge_gap = 1;
  std::string normalize_in;

  EvidenceOptions evidence;
  BackendOptions backend;
};

std::string env_or(const char* name, const std::string& fallback) {
  if (!fallback.empty()) return fallback;
  const char* v = std::getenv(name);
  return v ? std::string(v) : std::string{};
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string file_digest(const fs::path& p) { return hex64(fnv1a64(io::read_file(p))); }

std::string store_digest(const fs::path& dir) {
  return hex64(fnv1a64(io::read_file(dir / corpus::kManifestFile) + io::read_file(dir / corpus::kChunksFile)));
}

// Parameters plus content digests of every input. Output paths are left out
// so identical inputs hash identically wherever they live.
struct RunConfig {
  json config;
  std::string hash;

  RunConfig(const std::string& command, json params, json inputs) {
    config = json{{"command", command},
                  {"params", std::move(params)},
                  {"inputs", std::move(inputs)},
                  {"format_versions", {{"run_config", kRunConfigVersion}, {"chunk_store", corpus::kStoreFormatVersion}}}};
    hash = hex64(fnv1a64(io::dump(config)));
  }
};

void print_dry_run(std::ostream& out, const RunConfig& rc, const json& paths) {
  out << json{{"config", rc.config}, {"config_hash", rc.hash}, {"timestamp", utc_timestamp()}, {"paths", paths}}
             .dump(2)
      << "\n";
}

json evidence_params(const EvidenceOptions& e) {
  if (e.store.empty()) return json{{"store", nullptr}};
  return json{{"first_stage_k", e.k},        {"final_m", e.m},
              {"embedder", e.embedder},      {"embed_url", e.embed_url},
              {"query_prefix", e.query_prefix}, {"passage_prefix", e.passage_prefix}};
}

json backend_params(const BackendOptions& b) {
  json j{{"backend", b.backend}};
  if (b.backend == "http") j["score_url"] = b.score_url;
  if (b.backend == "toy") j["toy_fit"] = b.toy_fixed ? "fixed" : "prompt";
  return j;
}

void resolve_evidence(EvidenceOptions& e) {
  e.embed_url = env_or("REFIND_EMBED_URL", e.embed_url);
  if (e.embedder.empty()) e.embedder = e.embed_url.empty() ? "hash" : "http";
  if (e.embedder == "http" && e.embed_url.empty()) {
    throw ValidationError("--embedder http needs --embed-url or REFIND_EMBED_URL");
  }
}

void resolve_backend(BackendOptions& b, const std::string& dataset) {
  if (b.backend == "http") {
    b.score_url = env_or("REFIND_SCORE_URL", b.score_url);
    if (b.score_url.empty()) throw ValidationError("--backend http needs --score-url or REFIND_SCORE_URL");
  } else if (b.backend == "file") {
    if (b.recordings.empty()) b.recordings = dataset;
  }
}

json backend_inputs(const BackendOptions& b) {
  json j = json::object();
  if (b.backend == "file") j["recordings"] = file_digest(b.recordings);
  if (b.backend == "toy" && !b.toy_train.empty()) j["toy_train"] = file_digest(b.toy_train);
  return j;
}

std::unique_ptr<lm::ScoringBackend> make_backend(const BackendOptions& b) {
  if (b.backend == "http") return std::make_unique<lm::HttpScoringBackend>(b.score_url, b.timeout, b.retries);
  if (b.backend == "toy") {
    const auto base = b.toy_train.empty() ? std::string{} : io::read_file(b.toy_train);
    return std::make_unique<lm::ToyBackend>(base, !b.toy_fixed);
  }
  return std::make_unique<lm::RecordedBackend>(lm::RecordedBackend::from_file(b.recordings));
}

retrieval::RetrievalConfig retrieval_config(const EvidenceOptions& e) {
  retrieval::RetrievalConfig cfg;
  cfg.first_stage_k = e.k;
  cfg.final_m = e.m;
  cfg.query_prefix = e.query_prefix;
  cfg.passage_prefix = e.passage_prefix;
  cfg.embed_endpoint = e.embedder == "http" ? e.embed_url : std::string{};
  cfg.validate();
  return cfg;
}

std::shared_ptr<retrieval::Embedder> make_embedder(const EvidenceOptions& e) {
  if (e.embedder == "http") return std::make_shared<retrieval::HttpEmbedder>(e.embed_url, e.timeout);
  return std::make_shared<retrieval::HashingEmbedder>();
}

// Opens the store, loads (or builds) its BM25 index and returns a
// thread-safe evidence provider. Without a store every record gets empty
// evidence.
pipeline::EvidenceProvider make_evidence_provider(const EvidenceOptions& e) {
  if (e.store.empty()) return [](const AnnotatedResponse&) { return retrieval::EvidenceSet{}; };
  auto store = std::make_shared<corpus::ChunkStore>(corpus::ChunkStore::open(e.store));
  const auto index_path = fs::path(e.store) / retrieval::kIndexFile;
  auto index = std::make_shared<retrieval::Bm25Index>(fs::exists(index_path)
                                                          ? retrieval::Bm25Index::load(index_path, *store)
                                                          : retrieval::Bm25Index::build(*store));
  auto embedder = make_embedder(e);
  auto cfg = retrieval_config(e);
  return [store, index, embedder, cfg](const AnnotatedResponse& r) {
    if (retrieval::tokenize(r.question).empty()) {
      retrieval::EvidenceSet empty;
      empty.config = cfg;
      empty.embedder_id = embedder->id();
      return empty;
    }
    return retrieval::retrieve(r.question, *index, *store, cfg, *embedder);
  };
}

void report_failures(const std::vector<pipeline::RecordFailure>& failures, const std::string& errors_out,
                     std::ostream& err) {
  std::string blob;
  for (const auto& f : failures) {
    const auto line = io::dump(f.to_json());
    err << line << "\n";
    blob += line + "\n";
  }
  if (!errors_out.empty()) io::write_file_atomic(errors_out, blob);
}

std::vector<double> parse_deltas(const std::string& list) {
  std::vector<double> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ValidationError(fmt::format("--deltas: '{}' is not a number", item));
    }
  }
  if (out.empty()) throw ValidationError("--deltas must list at least one threshold");
  return out;
}

csr::DetectorConfig detector_config(const Options& o) {
  csr::DetectorConfig cfg;
  cfg.delta = o.delta;
  cfg.epsilon = o.epsilon;
  cfg.merge_across_whitespace = !o.no_merge_whitespace;
  cfg.validate();
  return cfg;
}

json evidence_inputs(const EvidenceOptions& e) {
  return e.store.empty() ? json(nullptr) : json(store_digest(e.store));
}

// ---------- commands ----------

int cmd_index(Options& o, std::ostream& out) {
  o.chunking.validate();
  o.bm25.validate();
  const RunConfig rc("index",
                     {{"window", o.chunking.target_window},
                      {"stride", o.chunking.stride},
                      {"max_chars", o.chunking.max_chars},
                      {"k1", o.bm25.k1},
                      {"b", o.bm25.b}},
                     {{"corpus", file_digest(o.corpus)}});
  if (o.dry_run) {
    print_dry_run(out, rc, {{"corpus", o.corpus}, {"out", o.index_out}});
    return kExitOk;
  }
  const auto docs = corpus::read_corpus(o.corpus);
  const auto result = corpus::ingest_corpus(docs, o.chunking, o.index_out);
  const auto index = retrieval::Bm25Index::build(result.store, o.bm25);
  index.save(fs::path(o.index_out) / retrieval::kIndexFile);
  io::write_file_atomic(fs::path(o.index_out) / "run.json",
                        io::dump({{"config", rc.config}, {"config_hash", rc.hash}}) + "\n");
  out << io::dump({{"docs", result.stats.docs}, {"chunks", result.stats.chunks}, {"config_hash", rc.hash}}) << "\n";
  return kExitOk;
}

int cmd_retrieve(Options& o, std::ostream& out) {
  resolve_evidence(o.evidence);
  const auto cfg = retrieval_config(o.evidence);
  const RunConfig rc("retrieve", {{"question", o.question}, {"retrieval", evidence_params(o.evidence)}},
                     {{"store", evidence_inputs(o.evidence)}});
  if (o.dry_run) {
    print_dry_run(out, rc, {{"store", o.evidence.store}});
    return kExitOk;
  }
  const auto store = corpus::ChunkStore::open(o.evidence.store);
  const auto index_path = fs::path(o.evidence.store) / retrieval::kIndexFile;
  const auto index = fs::exists(index_path) ? retrieval::Bm25Index::load(index_path, store)
                                            : retrieval::Bm25Index::build(store);
  auto embedder = make_embedder(o.evidence);
  auto evidence = retrieval::retrieve(o.question, index, store, cfg, *embedder);
  auto j = evidence.to_json();
  j["config_hash"] = rc.hash;
  j["question"] = o.question;
  out << j.dump(2) << "\n";
  return kExitOk;
}

int cmd_detect(Options& o, std::ostream& out, std::ostream& err) {
  resolve_evidence(o.evidence);
  resolve_backend(o.backend, o.dataset);
  const auto cfg = detector_config(o);
  if (!o.evidence.store.empty()) (void)retrieval_config(o.evidence);
  const RunConfig rc("detect",
                     {{"detector", cfg.to_json()},
                      {"retrieval", evidence_params(o.evidence)},
                      {"scoring", backend_params(o.backend)}},
                     {{"dataset", file_digest(o.dataset)},
                      {"store", evidence_inputs(o.evidence)},
                      {"scoring", backend_inputs(o.backend)}});
  if (o.dry_run) {
    print_dry_run(out, rc, {{"dataset", o.dataset}, {"store", o.evidence.store}, {"out", o.out}});
    return kExitOk;
  }
  const auto records = read_dataset(o.dataset);
  const auto provider = make_evidence_provider(o.evidence);
  auto backend = make_backend(o.backend);
  auto run = pipeline::run_detection(records, provider, *backend, cfg, o.parallelism);
  for (auto& p : run.predictions) {
    p.extra["config_hash"] = rc.hash;
    p.extra["provenance"]["retrieval"] = evidence_params(o.evidence);
  }
  io::write_file_atomic(o.out, eval::serialize_predictions(run.predictions));
  report_failures(run.failures, o.errors_out, err);
  out << io::dump({{"records", records.size()},
                   {"predicted", run.predictions.size()},
                   {"skipped", run.failures.size()},
                   {"config_hash", rc.hash}})
      << "\n";
  return kExitOk;
}

int cmd_detect_diff(Options& o, std::ostream& out, std::ostream& err) {
  resolve_evidence(o.evidence);
  o.editor_url = env_or("REFIND_EDITOR_URL", o.editor_url);
  if (o.edited.empty() && o.editor_url.empty()) {
    throw ValidationError("detect-diff needs --edited <file> or --editor-url <url>");
  }
  if (!o.evidence.store.empty()) (void)retrieval_config(o.evidence);
  json editor_inputs = o.edited.empty() ? json{{"editor_url", o.editor_url}} : json{{"edited", file_digest(o.edited)}};
  const RunConfig rc("detect-diff",
                     {{"merge_gap", o.merge_gap},
                      {"retrieval", evidence_params(o.evidence)},
                      {"editor_settings", diff::editor_settings_json()}},
                     {{"dataset", file_digest(o.dataset)}, {"store", evidence_inputs(o.evidence)},
                      {"editor", editor_inputs}});
  if (o.dry_run) {
    print_dry_run(out, rc, {{"dataset", o.dataset}, {"edited", o.edited}, {"out", o.out}});
    return kExitOk;
  }
  const auto records = read_dataset(o.dataset);
  const auto provider = make_evidence_provider(o.evidence);
  std::unique_ptr<diff::Editor> editor;
  if (!o.edited.empty()) {
    editor = std::make_unique<diff::RecordedEditor>(diff::RecordedEditor::from_file(o.edited));
  } else {
    editor = std::make_unique<diff::HttpEditor>(o.editor_url);
  }
  auto run = pipeline::run_diff_baseline(records, provider, *editor, o.merge_gap, o.parallelism);
  for (auto& p : run.predictions) p.extra["config_hash"] = rc.hash;
  io::write_file_atomic(o.out, eval::serialize_predictions(run.predictions));
  report_failures(run.failures, o.errors_out, err);
  out << io::dump({{"records", records.size()},
                   {"predicted", run.predictions.size()},
                   {"skipped", run.failures.size()},
                   {"config_hash", rc.hash}})
      << "\n";
  return kExitOk;
}

int cmd_eval(Options& o, std::ostream& out) {
  const RunConfig rc("eval", {{"label", o.label}}, {{"pred", file_digest(o.pred)}, {"gold", file_digest(o.gold)}});
  if (o.dry_run) {
    print_dry_run(out, rc, {{"pred", o.pred}, {"gold", o.gold}, {"out", o.out}});
    return kExitOk;
  }
  const auto preds = eval::read_predictions(o.pred);
  const auto gold = read_dataset(o.gold);

  std::set<std::string> hashes;
  for (const auto& p : preds) {
    if (p.extra.contains("config_hash")) hashes.insert(p.extra.at("config_hash").get<std::string>());
  }
  json snapshot{{"config_hash", rc.hash}, {"prediction_config_hashes", hashes}};
  if (!preds.empty() && preds.front().extra.contains("provenance")) {
    const auto& prov = preds.front().extra.at("provenance");
    for (const char* key : {"detector", "retrieval", "with_context_backend", "without_context_backend", "editor",
                            "editor_settings", "merge_gap"}) {
      if (prov.contains(key)) snapshot[key] = prov.at(key);
    }
  }
  auto report = eval::evaluate_dataset(preds, gold, snapshot);
  report.label = o.label;
  const auto table = eval::format_table({eval::table_row(report)});
  out << table;
  out << fmt::format("micro-average {:.4f} over {} records\n", report.micro_average, report.n_records);
  if (!o.out.empty()) io::write_file_atomic(o.out, io::dump(report.to_json()) + "\n");
  if (!o.table_out.empty()) io::write_file_atomic(o.table_out, table);
  return kExitOk;
}

int cmd_sweep(Options& o, std::ostream& out, std::ostream& err) {
  const auto deltas = parse_deltas(o.deltas);
  const auto cfg = detector_config(o);
  json inputs{{"dataset", file_digest(o.dataset)}};
  json params{{"deltas", deltas}, {"detector", cfg.to_json()}};
  if (o.pred.empty()) {
    resolve_evidence(o.evidence);
    resolve_backend(o.backend, o.dataset);
    if (!o.evidence.store.empty()) (void)retrieval_config(o.evidence);
    params["retrieval"] = evidence_params(o.evidence);
    params["scoring"] = backend_params(o.backend);
    inputs["store"] = evidence_inputs(o.evidence);
    inputs["scoring"] = backend_inputs(o.backend);
  } else {
    inputs["csr_from"] = file_digest(o.pred);
  }
  const RunConfig rc("sweep", params, inputs);
  if (o.dry_run) {
    print_dry_run(out, rc, {{"dataset", o.dataset}, {"pred", o.pred}, {"out", o.out}});
    return kExitOk;
  }
  const auto records = read_dataset(o.dataset);
  std::map<std::string, csr::CsrSeries> cache;
  std::vector<AnnotatedResponse> scored;
  if (o.pred.empty()) {
    const auto provider = make_evidence_provider(o.evidence);
    auto backend = make_backend(o.backend);
    auto run = pipeline::run_detection(records, provider, *backend, cfg, o.parallelism);
    report_failures(run.failures, o.errors_out, err);
    cache = std::move(run.csr);
  } else {
    for (const auto& p : eval::read_predictions(o.pred)) {
      csr::CsrSeries s;
      s.values = p.csr;
      s.epsilon = cfg.epsilon;
      cache.emplace(p.id, std::move(s));
    }
  }
  for (const auto& r : records) {
    const auto it = cache.find(r.id);
    if (it == cache.end()) continue;
    if (it->second.values.size() != r.tokens.size()) {
      throw AlignmentError(fmt::format("cached CSR for '{}' has {} values for {} tokens", r.id,
                                       it->second.values.size(), r.tokens.size()),
                           r.id);
    }
    scored.push_back(r);
  }
  if (scored.size() != records.size()) {
    err << fmt::format("sweep: {} of {} records have no CSR series and are excluded\n", records.size() - scored.size(),
                       records.size());
  }
  const auto cells = eval::threshold_sweep(scored, cache, deltas, cfg);
  const auto tsv = eval::format_sweep(cells);
  if (!o.out.empty()) io::write_file_atomic(o.out, tsv);
  out << tsv;
  return kExitOk;
}

int cmd_normalize(Options& o, std::ostream& out, std::ostream& err) {
  const RunConfig rc("normalize", json::object(), {{"in", file_digest(o.normalize_in)}});
  if (o.dry_run) {
    print_dry_run(out, rc, {{"in", o.normalize_in}, {"out", o.out}});
    return kExitOk;
  }
  std::vector<AnnotatedResponse> records;
  std::vector<pipeline::RecordFailure> failures;
  std::set<std::string> ids;
  for (const auto& raw : io::read_jsonl(o.normalize_in)) {
    try {
      auto r = normalize_record(raw);
      if (!ids.insert(r.id).second) throw DuplicateIdError(r.id);
      records.push_back(std::move(r));
    } catch (const Error& e) {
      const auto id = raw.contains("id") && raw.at("id").is_string() ? raw.at("id").get<std::string>() : e.record_id();
      failures.push_back({id, e.code(), e.what()});
    }
  }
  io::write_file_atomic(o.out, serialize_dataset(records));
  report_failures(failures, o.errors_out, err);
  out << io::dump({{"records", records.size()}, {"skipped", failures.size()}, {"config_hash", rc.hash}}) << "\n";
  return kExitOk;
}

void add_evidence_options(CLI::App* cmd, EvidenceOptions& e, bool store_required) {
  auto* store = cmd->add_option("--store", e.store, "Chunk store directory written by `index`");
  store->check(CLI::ExistingDirectory);
  if (store_required) store->required();
  cmd->add_option("--k", e.k, "First-stage BM25 depth")->capture_default_str();
  cmd->add_option("--m", e.m, "Passages kept after reranking")->capture_default_str();
  cmd->add_option("--embed-url", e.embed_url, "Embedding service endpoint (env REFIND_EMBED_URL)");
  cmd->add_option("--embedder", e.embedder, "Embedder: http or hash")->check(CLI::IsMember({"http", "hash"}));
  cmd->add_option("--query-prefix", e.query_prefix)->capture_default_str();
  cmd->add_option("--passage-prefix", e.passage_prefix)->capture_default_str();
}

void add_backend_options(CLI::App* cmd, BackendOptions& b) {
  cmd->add_option("--backend", b.backend, "Scoring backend: file, http or toy")
      ->check(CLI::IsMember({"file", "http", "toy"}))
      ->capture_default_str();
  cmd->add_option("--score-url", b.score_url, "Scoring endpoint (env REFIND_SCORE_URL)");
  cmd->add_option("--recordings", b.recordings, "Recorded with-context log-probabilities (default: the dataset)")
      ->check(CLI::ExistingFile);
  cmd->add_option("--toy-train", b.toy_train, "Extra training text for the toy backend")->check(CLI::ExistingFile);
  cmd->add_flag("--toy-fixed", b.toy_fixed, "Fit the toy model on --toy-train only, ignoring the prompt");
  cmd->add_option("--timeout", b.timeout, "Scoring request timeout in seconds")->capture_default_str();
  cmd->add_option("--retries", b.retries, "Retries on transport failure")->capture_default_str();
}

void add_detector_options(CLI::App* cmd, Options& o) {
  cmd->add_option("--delta", o.delta, "CSR threshold")->capture_default_str();
  cmd->add_option("--epsilon", o.epsilon, "Denominator offset")->capture_default_str();
  cmd->add_flag("--no-merge-whitespace", o.no_merge_whitespace, "Do not join flagged runs across whitespace tokens");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Retrieval-augmented hallucination span detection and evaluation", "refind"};
  app.require_subcommand(1);
  app.add_flag("--dry-run", o.dry_run, "Print the resolved run configuration and exit");
  app.add_option("--parallelism", o.parallelism, "Maximum concurrent records")->check(CLI::PositiveNumber);

  auto* index = app.add_subcommand("index", "Chunk a corpus into a store and build its BM25 index");
  index->add_option("--corpus", o.corpus, "Line-delimited {doc_id, title, text, lang}")
      ->required()
      ->check(CLI::ExistingFile);
  index->add_option("--out", o.index_out, "Store directory")->required();
  index->add_option("--window", o.chunking.target_window, "Words per chunk")->capture_default_str();
  index->add_option("--stride", o.chunking.stride, "Words between chunk starts")->capture_default_str();
  index->add_option("--max-chars", o.chunking.max_chars, "Hard cap on chunk length")->capture_default_str();
  index->add_option("--k1", o.bm25.k1)->capture_default_str();
  index->add_option("--b", o.bm25.b)->capture_default_str();

  auto* retrieve = app.add_subcommand("retrieve", "Retrieve evidence for one question");
  retrieve->add_option("--question", o.question)->required();
  add_evidence_options(retrieve, o.evidence, true);

  auto* detect = app.add_subcommand("detect", "Predict hallucinated spans from context sensitivity");
  detect->add_option("--dataset", o.dataset)->required()->check(CLI::ExistingFile);
  detect->add_option("--out", o.out, "Prediction file")->required();
  detect->add_option("--errors", o.errors_out, "Write skipped-record errors here");
  add_evidence_options(detect, o.evidence, false);
  add_backend_options(detect, o.backend);
  add_detector_options(detect, o);

  auto* detect_diff = app.add_subcommand("detect-diff", "Predict spans by diffing against an edited answer");
  detect_diff->add_option("--dataset", o.dataset)->required()->check(CLI::ExistingFile);
  detect_diff->add_option("--out", o.out, "Prediction file")->required();
  detect_diff->add_option("--edited", o.edited, "Line-delimited {id, edited}")->check(CLI::ExistingFile);
  detect_diff->add_option("--editor-url", o.editor_url, "Editor endpoint (env REFIND_EDITOR_URL)");
  detect_diff->add_option("--merge-gap", o.merge_gap)->capture_default_str();
  detect_diff->add_option("--errors", o.errors_out, "Write skipped-record errors here");
  add_evidence_options(detect_diff, o.evidence, false);

  auto* evaluate = app.add_subcommand("eval", "Score predictions against gold spans");
  evaluate->add_option("--pred", o.pred)->required()->check(CLI::ExistingFile);
  evaluate->add_option("--gold", o.gold)->required()->check(CLI::ExistingFile);
  evaluate->add_option("--out", o.out, "Machine-readable JSON report");
  evaluate->add_option("--table", o.table_out, "Human-readable table");
  evaluate->add_option("--label", o.label)->capture_default_str();

  auto* sweep = app.add_subcommand("sweep", "Mean IoU per language over a grid of thresholds");
  sweep->add_option("--dataset", o.dataset)->required()->check(CLI::ExistingFile);
  sweep->add_option("--deltas", o.deltas)->capture_default_str();
  sweep->add_option("--pred", o.pred, "Reuse CSR series from a detect output")->check(CLI::ExistingFile);
  sweep->add_option("--out", o.out, "Tab-separated table");
  sweep->add_option("--errors", o.errors_out, "Write skipped-record errors here");
  add_evidence_options(sweep, o.evidence, false);
  add_backend_options(sweep, o.backend);
  add_detector_options(sweep, o);

  auto* normalize = app.add_subcommand("normalize", "Convert raw dataset files to the canonical format");
  normalize->add_option("--in", o.normalize_in)->required()->check(CLI::ExistingFile);
  normalize->add_option("--out", o.out)->required();
  normalize->add_option("--errors", o.errors_out, "Write skipped-record errors here");

  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << Error(ErrorCode::kValidation, e.what()).to_json() << "\n";
    return kExitUsage;
  }

  try {
    if (index->parsed()) return cmd_index(o, out);
    if (retrieve->parsed()) return cmd_retrieve(o, out);
    if (detect->parsed()) return cmd_detect(o, out, err);
    if (detect_diff->parsed()) return cmd_detect_diff(o, out, err);
    if (evaluate->parsed()) return cmd_eval(o, out);
    if (sweep->parsed()) return cmd_sweep(o, out, err);
    if (normalize->parsed()) return cmd_normalize(o, out, err);
  } catch (const ValidationError& e) {
    err << e.to_json() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << e.to_json() << "\n";
    return kExitFailure;
  } catch (const std::exception& e) {
    err << Error(ErrorCode::kIo, e.what()).to_json() << "\n";
    return kExitFailure;
  }
  err << Error(ErrorCode::kValidation, "no command given").to_json() << "\n";
  return kExitUsage;
}

}  // namespace refind::cli
