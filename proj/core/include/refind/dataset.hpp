#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "refind/spans.hpp"

namespace refind {

// One output token with its character offsets into the output text.
struct Token {
  std::string text;
  CharRange char_range;
  std::optional<double> logprob;          // without-context, natural log
  std::optional<double> context_logprob;  // recorded with-context value, if any

  friend bool operator==(const Token&, const Token&) = default;
};

// One dataset record: a question, the model answer, its tokens, gold spans.
struct AnnotatedResponse {
  std::string id;
  std::string lang;
  std::string question;
  std::string model_id;
  std::string output_text;
  std::vector<Token> tokens;
  CharSpanSet gold_spans;

  std::size_t text_len() const { return gold_spans.text_len(); }
};

// Tokens must be sorted, non-overlapping, equal to their output slices and
// jointly cover every non-whitespace character. Throws DataError.
void validate_tokens(const std::string& output_text, const std::vector<Token>& tokens,
                     const std::string& record_id = {});

// Recovers offsets for token strings by greedy left-to-right matching against
// the output. Leading-space sentinels (U+2581, U+0120) read as a literal
// space and U+010A as a newline. A token that cannot be matched is a
// DataError naming its index; nothing is guessed.
std::vector<CharRange> reconstruct_offsets(const std::string& output_text, const std::vector<std::string>& tokens,
                                           const std::string& record_id = {});

// Canonical record:
//   {"id", "lang", "question", "model_id", "output_text",
//    "tokens": [{"text", "logprob", "start", "end"[, "context_logprob"]}],
//    "hard_labels": [[start, end], ...]}
AnnotatedResponse record_from_json(const nlohmann::json& j);
nlohmann::json record_to_json(const AnnotatedResponse& r);

// Accepts canonical records as well as raw shared-task records
// (model_input, model_output_text, model_output_tokens, model_output_logits)
// and canonical records whose tokens lack offsets.
AnnotatedResponse normalize_record(const nlohmann::json& raw);

std::vector<AnnotatedResponse> read_dataset(const std::filesystem::path& path);
std::string serialize_dataset(const std::vector<AnnotatedResponse>& records);

}  // namespace refind
