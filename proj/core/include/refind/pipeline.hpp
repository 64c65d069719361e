#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "refind/csr.hpp"
#include "refind/dataset.hpp"
#include "refind/diff_spans.hpp"
#include "refind/error.hpp"
#include "refind/evaluation.hpp"
#include "refind/lm_scoring.hpp"
#include "refind/retrieval.hpp"

namespace refind::pipeline {

// Must be callable from several threads at once.
using EvidenceProvider = std::function<retrieval::EvidenceSet(const AnnotatedResponse&)>;

struct RecordFailure {
  std::string record_id;
  ErrorCode code = ErrorCode::kData;
  std::string message;

  nlohmann::json to_json() const;
};

struct DetectionRun {
  std::vector<eval::Prediction> predictions;  // dataset order, failed records omitted
  std::map<std::string, csr::CsrSeries> csr;  // keyed by record id
  std::vector<RecordFailure> failures;        // dataset order
};

// Runs detection over every record with at most `parallelism` workers.
// Alignment, data, validation and protocol errors skip the record and are reported in
// `failures`; transport errors abort the whole run.
DetectionRun run_detection(const std::vector<AnnotatedResponse>& records, const EvidenceProvider& evidence,
                           lm::ScoringBackend& backend, const csr::DetectorConfig& cfg, std::size_t parallelism = 1);

struct DiffRun {
  std::vector<eval::Prediction> predictions;
  std::vector<RecordFailure> failures;
};

// Editor-based baseline: render the editor prompt, obtain the edited text,
// diff it against the original output and keep the changed spans.
DiffRun run_diff_baseline(const std::vector<AnnotatedResponse>& records, const EvidenceProvider& evidence,
                          diff::Editor& editor, std::size_t merge_gap, std::size_t parallelism = 1);

// Evaluates `body(i)` for i in [0, n) on up to `parallelism` threads. The
// first exception thrown stops further work and is rethrown to the caller.
void parallel_for(std::size_t n, std::size_t parallelism, const std::function<void(std::size_t)>& body);

}  // namespace refind::pipeline
