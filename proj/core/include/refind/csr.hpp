#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "refind/dataset.hpp"
#include "refind/lm_scoring.hpp"
#include "refind/retrieval.hpp"
#include "refind/spans.hpp"

namespace refind::csr {

inline constexpr double kDefaultEpsilon = 1e-8;
inline constexpr double kDefaultDelta = 0.3;

// Per-token context sensitivity ratios for one response.
struct CsrSeries {
  std::vector<double> values;
  double epsilon = kDefaultEpsilon;
  std::string with_context_backend;
  std::string without_context_backend;
};

struct DetectorConfig {
  double delta = kDefaultDelta;
  double epsilon = kDefaultEpsilon;
  bool merge_across_whitespace = true;

  void validate() const;
  nlohmann::json to_json() const;
};

// values[i] = with[i] / (without[i] + epsilon). Throws AlignmentError when
// the series lengths differ.
CsrSeries compute_csr(const lm::LogProbSeries& with_ctx, const lm::LogProbSeries& without_ctx,
                      double epsilon = kDefaultEpsilon);

// flags[i] = values[i] >= delta.
std::vector<bool> classify_tokens(const CsrSeries& csr, double delta);

// Each maximal run of flagged tokens becomes one span from the first token's
// start to the last token's end. With merge_across_whitespace, runs separated
// only by whitespace tokens are joined.
CharSpanSet assemble_spans(const std::vector<bool>& flags, const std::vector<Token>& tokens, std::size_t text_len,
                           const DetectorConfig& cfg);

struct Detection {
  CharSpanSet spans;
  CsrSeries csr;
  std::vector<bool> flags;
  nlohmann::json provenance;
};

// Full per-record pipeline: render prompt, score with evidence, load the
// reference series, compute CSR, threshold and assemble spans.
Detection detect(const AnnotatedResponse& record, const retrieval::EvidenceSet& evidence,
                 lm::ScoringBackend& backend, const DetectorConfig& cfg);

// Re-threshold an already computed series.
CharSpanSet spans_at(const AnnotatedResponse& record, const CsrSeries& csr, const DetectorConfig& cfg);

}  // namespace refind::csr
