#include "refind/lm_scoring.hpp"

#include <algorithm>
#include <chrono>
#include <thread>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "refind/error.hpp"
#include "refind/hash.hpp"
#include "refind/http.hpp"
#include "refind/io.hpp"
#include "refind/prompts.hpp"

namespace refind::lm {

using nlohmann::json;

std::string_view to_string(Conditioning c) {
  return c == Conditioning::kWithContext ? "with_context" : "without_context";
}

double clamp_logprob(double logprob) { return std::clamp(logprob, kMinLogProb, kMaxLogProb); }

RecordedBackend::RecordedBackend(std::unordered_map<std::string, std::vector<double>> recordings, std::string source)
    : recordings_(std::move(recordings)), source_(std::move(source)) {}

RecordedBackend RecordedBackend::from_records(const std::vector<AnnotatedResponse>& records, std::string source) {
  std::unordered_map<std::string, std::vector<double>> rec;
  for (const auto& r : records) {
    std::vector<double> values;
    values.reserve(r.tokens.size());
    for (std::size_t i = 0; i < r.tokens.size(); ++i) {
      if (!r.tokens[i].context_logprob) {
        throw DataError(fmt::format("record '{}': token {} has no context_logprob", r.id, i), r.id);
      }
      values.push_back(*r.tokens[i].context_logprob);
    }
    if (!rec.emplace(r.id, std::move(values)).second) throw DuplicateIdError(r.id);
  }
  return RecordedBackend(std::move(rec), std::move(source));
}

RecordedBackend RecordedBackend::from_file(const std::filesystem::path& path) {
  const auto rows = io::read_jsonl(path);
  const bool plain = !rows.empty() && rows.front().contains("logprobs");
  if (!plain) {
    std::vector<AnnotatedResponse> records;
    records.reserve(rows.size());
    for (const auto& j : rows) records.push_back(record_from_json(j));
    return from_records(records, path.filename().string());
  }
  std::unordered_map<std::string, std::vector<double>> rec;
  for (const auto& j : rows) {
    try {
      auto id = j.at("id").get<std::string>();
      if (!rec.emplace(id, j.at("logprobs").get<std::vector<double>>()).second) throw DuplicateIdError(id);
    } catch (const json::exception& e) {
      throw DataError(fmt::format("{}: {}", path.string(), e.what()));
    }
  }
  return RecordedBackend(std::move(rec), path.filename().string());
}

std::vector<double> RecordedBackend::logprobs(const ScoringRequest& req) {
  const auto it = recordings_.find(req.record_id);
  if (it == recordings_.end()) {
    throw DataError(fmt::format("no recorded log-probabilities for record '{}'", req.record_id), req.record_id);
  }
  return it->second;
}

HttpScoringBackend::HttpScoringBackend(std::string endpoint, int timeout_seconds, int retries)
    : endpoint_(std::move(endpoint)), timeout_seconds_(timeout_seconds), retries_(std::max(0, retries)) {}

std::vector<double> HttpScoringBackend::logprobs(const ScoringRequest& req) {
  const json body{{"prompt", req.prompt}, {"continuation_tokens", req.continuation_tokens}};
  for (int attempt = 0;; ++attempt) {
    try {
      const auto reply = http::post_json(endpoint_, body, timeout_seconds_);
      // Parse by hand so that non-finite encodings (null) are caught here.
      const auto& arr = reply.at("logprobs");
      std::vector<double> out;
      out.reserve(arr.size());
      for (const auto& v : arr) {
        if (!v.is_number()) throw ProtocolError(fmt::format("{}: non-numeric log-probability", endpoint_));
        out.push_back(v.get<double>());
      }
      return out;
    } catch (const TransportError&) {
      if (attempt >= retries_) throw;
      std::this_thread::sleep_for(std::chrono::milliseconds(200 * (attempt + 1)));
    } catch (const json::exception& e) {
      throw ProtocolError(fmt::format("{}: malformed scoring reply: {}", endpoint_, e.what()));
    }
  }
}

ToyBackend::ToyBackend(std::string base_text, bool fit_on_prompt)
    : base_text_(std::move(base_text)), fit_on_prompt_(fit_on_prompt) {
  if (!fit_on_prompt_) fixed_ = ToyModel::fit(base_text_);
}

std::vector<double> ToyBackend::logprobs(const ScoringRequest& req) {
  if (fixed_) return toy_lm_score(*fixed_, req.prompt, req.continuation_tokens);
  const auto model = ToyModel::fit(base_text_ + req.prompt);
  return toy_lm_score(model, req.prompt, req.continuation_tokens);
}

std::string ToyBackend::id() const {
  return fmt::format("toy:trigram-laplace:{}:{}", fit_on_prompt_ ? "prompt" : "fixed", hex64(fnv1a64(base_text_)));
}

std::string render_prompt(const std::vector<std::string>& passages, std::string_view question) {
  const auto refs = prompts::number_passages(passages);
  return prompts::fill(prompts::kDetectorTemplate, {{"reference_passages", refs}, {"question", question}});
}

std::string render_prompt(const retrieval::EvidenceSet& evidence, std::string_view question) {
  std::vector<std::string> passages;
  passages.reserve(evidence.chunks.size());
  for (const auto& c : evidence.chunks) passages.push_back(c.text);
  return render_prompt(passages, question);
}

LogProbSeries score_continuation(ScoringBackend& backend, const ScoringRequest& req) {
  if (req.continuation_tokens.empty()) throw ValidationError("scoring request has no continuation tokens");
  auto raw = backend.logprobs(req);
  if (raw.size() != req.continuation_tokens.size()) {
    throw AlignmentError(fmt::format("backend {} returned {} log-probabilities for {} tokens", backend.id(),
                                     raw.size(), req.continuation_tokens.size()),
                         req.record_id);
  }
  LogProbSeries series;
  series.conditioning = Conditioning::kWithContext;
  series.backend_id = backend.id();
  series.values.reserve(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const double v = raw[i];
    if (std::isnan(v) || v > 0.0 || std::isinf(v)) {
      throw ProtocolError(fmt::format("backend {} returned log-probability {} for token {} (probability outside (0, 1])",
                                      backend.id(), v, i));
    }
    series.values.push_back(clamp_logprob(v));
  }
  return series;
}

LogProbSeries load_reference_logprobs(const AnnotatedResponse& record) {
  LogProbSeries series;
  series.conditioning = Conditioning::kWithoutContext;
  series.backend_id = "reference";
  series.values.reserve(record.tokens.size());
  for (std::size_t i = 0; i < record.tokens.size(); ++i) {
    const auto& lp = record.tokens[i].logprob;
    if (!lp) throw DataError(fmt::format("record '{}': token {} has no logprob", record.id, i), record.id);
    if (std::isnan(*lp)) throw DataError(fmt::format("record '{}': token {} logprob is NaN", record.id, i), record.id);
    series.values.push_back(clamp_logprob(*lp));
  }
  return series;
}

}  // namespace refind::lm
