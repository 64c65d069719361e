#pragma once

#include <cmath>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "refind/dataset.hpp"
#include "refind/retrieval.hpp"
#include "refind/toy_lm.hpp"

namespace refind::lm {

enum class Conditioning { kWithContext, kWithoutContext };
std::string_view to_string(Conditioning c);

// Probabilities are clamped into [1e-12, 1 - 1e-12] before use.
inline constexpr double kProbFloor = 1e-12;
inline const double kMinLogProb = std::log(kProbFloor);
inline const double kMaxLogProb = std::log1p(-kProbFloor);

double clamp_logprob(double logprob);

struct LogProbSeries {
  std::vector<double> values;  // natural log, clamped
  Conditioning conditioning = Conditioning::kWithContext;
  std::string backend_id;
};

struct ScoringRequest {
  std::string record_id;  // routing key for recorded backends; not sent on the wire
  std::string prompt;
  std::vector<std::string> continuation_tokens;
};

// Forced-continuation scorer: returns one natural-log probability per
// continuation token, conditioned on the prompt and the preceding tokens.
class ScoringBackend {
 public:
  virtual ~ScoringBackend() = default;
  virtual std::vector<double> logprobs(const ScoringRequest& req) = 0;
  virtual std::string id() const = 0;
};

// Replays with-context log-probabilities recorded per record id.
class RecordedBackend final : public ScoringBackend {
 public:
  explicit RecordedBackend(std::unordered_map<std::string, std::vector<double>> recordings,
                           std::string source = "memory");

  // From dataset records carrying tokens[].context_logprob.
  static RecordedBackend from_records(const std::vector<AnnotatedResponse>& records, std::string source = "dataset");

  // Line-delimited {"id", "logprobs": [...]} or canonical dataset records.
  static RecordedBackend from_file(const std::filesystem::path& path);

  std::vector<double> logprobs(const ScoringRequest& req) override;
  std::string id() const override { return "file:" + source_; }

 private:
  std::unordered_map<std::string, std::vector<double>> recordings_;
  std::string source_;
};

// POST {"prompt", "continuation_tokens"} -> {"logprobs": [...]}. Transport
// failures are retried `retries` times before surfacing.
class HttpScoringBackend final : public ScoringBackend {
 public:
  explicit HttpScoringBackend(std::string endpoint, int timeout_seconds = 120, int retries = 2);
  std::vector<double> logprobs(const ScoringRequest& req) override;
  std::string id() const override { return "http:" + endpoint_; }

 private:
  std::string endpoint_;
  int timeout_seconds_;
  int retries_;
};

// Character-trigram scorer. With `fit_on_prompt` the model is refit for each
// request on `base_text + prompt`, which makes it sensitive to the evidence
// in the prompt; otherwise a single model fitted on `base_text` is used.
class ToyBackend final : public ScoringBackend {
 public:
  explicit ToyBackend(std::string base_text = {}, bool fit_on_prompt = true);
  std::vector<double> logprobs(const ScoringRequest& req) override;
  std::string id() const override;

 private:
  std::string base_text_;
  bool fit_on_prompt_;
  std::optional<ToyModel> fixed_;
};

// Renders the scoring prompt with numbered evidence passages.
std::string render_prompt(const retrieval::EvidenceSet& evidence, std::string_view question);
std::string render_prompt(const std::vector<std::string>& passages, std::string_view question);

// Validates and clamps the backend's answer. Count mismatch raises
// AlignmentError; NaN, +inf, -inf or positive values raise ProtocolError.
LogProbSeries score_continuation(ScoringBackend& backend, const ScoringRequest& req);

// Without-context series from the record's own token log-probabilities.
LogProbSeries load_reference_logprobs(const AnnotatedResponse& record);

}  // namespace refind::lm
