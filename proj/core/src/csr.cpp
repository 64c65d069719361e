#include "refind/csr.hpp"

#include <cmath>

#include <fmt/format.h>

#include "refind/error.hpp"
#include "refind/text.hpp"

namespace refind::csr {

using nlohmann::json;

void DetectorConfig::validate() const {
  if (!(delta >= 0.0)) throw ValidationError("detector delta must be >= 0");
  if (!(epsilon > 0.0)) throw ValidationError("detector epsilon must be > 0");
}

json DetectorConfig::to_json() const {
  return json{{"delta", delta}, {"epsilon", epsilon}, {"merge_across_whitespace", merge_across_whitespace}};
}

CsrSeries compute_csr(const lm::LogProbSeries& with_ctx, const lm::LogProbSeries& without_ctx, double epsilon) {
  if (with_ctx.conditioning != lm::Conditioning::kWithContext ||
      without_ctx.conditioning != lm::Conditioning::kWithoutContext) {
    throw ValidationError("compute_csr expects (with_context, without_context) series");
  }
  if (with_ctx.values.size() != without_ctx.values.size()) {
    throw AlignmentError(fmt::format("with-context series has {} values, without-context has {}",
                                     with_ctx.values.size(), without_ctx.values.size()));
  }
  CsrSeries out;
  out.epsilon = epsilon;
  out.with_context_backend = with_ctx.backend_id;
  out.without_context_backend = without_ctx.backend_id;
  out.values.reserve(with_ctx.values.size());
  for (std::size_t i = 0; i < with_ctx.values.size(); ++i) {
    const double v = with_ctx.values[i] / (without_ctx.values[i] + epsilon);
    if (!std::isfinite(v)) throw DataError(fmt::format("CSR for token {} is not finite", i));
    out.values.push_back(v);
  }
  return out;
}

std::vector<bool> classify_tokens(const CsrSeries& csr, double delta) {
  std::vector<bool> flags;
  flags.reserve(csr.values.size());
  for (double v : csr.values) flags.push_back(v >= delta);
  return flags;
}

CharSpanSet assemble_spans(const std::vector<bool>& flags, const std::vector<Token>& tokens, std::size_t text_len,
                           const DetectorConfig& cfg) {
  if (flags.size() != tokens.size()) {
    throw AlignmentError(fmt::format("{} flags for {} tokens", flags.size(), tokens.size()));
  }
  const auto whitespace_token = [&](std::size_t i) { return text::is_blank(text::decode(tokens[i].text)); };

  std::vector<CharRange> spans;
  std::size_t i = 0;
  while (i < tokens.size()) {
    if (!flags[i]) {
      ++i;
      continue;
    }
    CharRange run{tokens[i].char_range.start, tokens[i].char_range.end};
    std::size_t j = i + 1;
    while (true) {
      while (j < tokens.size() && flags[j]) run.end = tokens[j++].char_range.end;
      if (!cfg.merge_across_whitespace) break;
      // Look past unflagged whitespace tokens for another flagged run.
      auto k = j;
      while (k < tokens.size() && !flags[k] && whitespace_token(k)) ++k;
      if (k == j || k == tokens.size() || !flags[k]) break;
      j = k;
    }
    spans.push_back(run);
    i = j;
  }
  return CharSpanSet::normalized(std::move(spans), text_len);
}

CharSpanSet spans_at(const AnnotatedResponse& record, const CsrSeries& csr, const DetectorConfig& cfg) {
  return assemble_spans(classify_tokens(csr, cfg.delta), record.tokens, record.text_len(), cfg);
}

Detection detect(const AnnotatedResponse& record, const retrieval::EvidenceSet& evidence,
                 lm::ScoringBackend& backend, const DetectorConfig& cfg) {
  cfg.validate();
  lm::ScoringRequest req;
  req.record_id = record.id;
  req.prompt = lm::render_prompt(evidence, record.question);
  req.continuation_tokens.reserve(record.tokens.size());
  for (const auto& t : record.tokens) req.continuation_tokens.push_back(t.text);

  Detection d;
  try {
    const auto with_ctx = lm::score_continuation(backend, req);
    const auto without_ctx = lm::load_reference_logprobs(record);
    d.csr = compute_csr(with_ctx, without_ctx, cfg.epsilon);
  } catch (const AlignmentError& e) {
    throw AlignmentError(e.what(), record.id);
  }
  d.flags = classify_tokens(d.csr, cfg.delta);
  d.spans = assemble_spans(d.flags, record.tokens, record.text_len(), cfg);

  json evidence_ids = json::array();
  for (const auto& c : evidence.chunks) evidence_ids.push_back(c.chunk_id);
  d.provenance = json{{"with_context_backend", d.csr.with_context_backend},
                      {"without_context_backend", d.csr.without_context_backend},
                      {"evidence", evidence.empty() ? json("none") : std::move(evidence_ids)},
                      {"detector", cfg.to_json()}};
  return d;
}

}  // namespace refind::csr
