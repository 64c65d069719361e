#include "refind/pipeline.hpp"

#include <atomic>
#include <exception>
#include <mutex>
#include <optional>
#include <thread>


namespace refind::pipeline {

using nlohmann::json;

json RecordFailure::to_json() const {
  return json{{"record_id", record_id}, {"code", std::string(to_string(code))}, {"message", message}};
}

void parallel_for(std::size_t n, std::size_t parallelism, const std::function<void(std::size_t)>& body) {
  const auto workers = std::max<std::size_t>(1, std::min(parallelism, n));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::exception_ptr first_error;
  std::mutex error_mu;
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        while (!stop.load()) {
          const auto i = next.fetch_add(1);
          if (i >= n) break;
          try {
            body(i);
          } catch (...) {
            std::lock_guard lock(error_mu);
            if (!first_error) first_error = std::current_exception();
            stop = true;
          }
        }
      });
    }
  }
  if (first_error) std::rethrow_exception(first_error);
}

namespace {

bool skippable(const Error& e) {
  switch (e.code()) {
    case ErrorCode::kAlignment:
    case ErrorCode::kData:
    case ErrorCode::kProtocol:
    case ErrorCode::kValidation:
      return true;
    default:
      return false;
  }
}

}  // namespace

DetectionRun run_detection(const std::vector<AnnotatedResponse>& records, const EvidenceProvider& evidence,
                           lm::ScoringBackend& backend, const csr::DetectorConfig& cfg, std::size_t parallelism) {
  cfg.validate();
  struct Slot {
    std::optional<csr::Detection> detection;
    std::optional<RecordFailure> failure;
  };
  std::vector<Slot> slots(records.size());
  parallel_for(records.size(), parallelism, [&](std::size_t i) {
    const auto& r = records[i];
    try {
      slots[i].detection = csr::detect(r, evidence(r), backend, cfg);
    } catch (const Error& e) {
      if (!skippable(e)) throw;
      slots[i].failure = RecordFailure{r.id, e.code(), e.what()};
    }
  });

  DetectionRun run;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (slots[i].failure) {
      run.failures.push_back(std::move(*slots[i].failure));
      continue;
    }
    auto& d = *slots[i].detection;
    eval::Prediction p;
    p.id = r.id;
    p.lang = r.lang;
    p.spans = d.spans.spans();
    p.text_len = r.text_len();
    p.delta = cfg.delta;
    p.csr = d.csr.values;
    p.extra["provenance"] = d.provenance;
    run.predictions.push_back(std::move(p));
    run.csr.emplace(r.id, std::move(d.csr));
  }
  return run;
}

DiffRun run_diff_baseline(const std::vector<AnnotatedResponse>& records, const EvidenceProvider& evidence,
                          diff::Editor& editor, std::size_t merge_gap, std::size_t parallelism) {
  struct Slot {
    std::optional<eval::Prediction> prediction;
    std::optional<RecordFailure> failure;
  };
  std::vector<Slot> slots(records.size());
  parallel_for(records.size(), parallelism, [&](std::size_t i) {
    const auto& r = records[i];
    try {
      const auto ev = evidence(r);
      const auto prompt = diff::build_editor_prompt(ev, r.output_text);
      const auto edited = editor.edit(r.id, prompt);
      const auto script = diff::align_texts(r.output_text, edited);
      const auto spans = diff::extract_spans(script, r.text_len(), merge_gap);
      eval::Prediction p;
      p.id = r.id;
      p.lang = r.lang;
      p.spans = spans.spans();
      p.text_len = r.text_len();
      json evidence_ids = json::array();
      for (const auto& c : ev.chunks) evidence_ids.push_back(c.chunk_id);
      p.extra["provenance"] = json{{"editor", editor.id()},
                                   {"editor_settings", diff::editor_settings_json()},
                                   {"evidence", ev.empty() ? json("none") : std::move(evidence_ids)},
                                   {"merge_gap", merge_gap}};
      p.extra["edited"] = edited;
      slots[i].prediction = std::move(p);
    } catch (const Error& e) {
      if (!skippable(e)) throw;
      slots[i].failure = RecordFailure{r.id, e.code(), e.what()};
    }
  });
  DiffRun run;
  for (auto& s : slots) {
    if (s.failure) run.failures.push_back(std::move(*s.failure));
    else run.predictions.push_back(std::move(*s.prediction));
  }
  return run;
}

}  // namespace refind::pipeline
