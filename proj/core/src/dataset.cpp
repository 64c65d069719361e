#include "refind/dataset.hpp"

#include <fmt/format.h>

#include "refind/error.hpp"
#include "refind/io.hpp"
#include "refind/text.hpp"

namespace refind {

using nlohmann::json;

void validate_tokens(const std::string& output_text, const std::vector<Token>& tokens, const std::string& record_id) {
  const auto chars = text::decode(output_text);
  std::size_t cursor = 0;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const auto& r = tokens[i].char_range;
    if (r.start >= r.end || r.end > chars.size()) {
      throw DataError(fmt::format("record '{}': token {} range [{}, {}) invalid for text length {}", record_id, i,
                                  r.start, r.end, chars.size()),
                      record_id);
    }
    if (r.start < cursor) {
      throw DataError(fmt::format("record '{}': token {} overlaps or precedes token {}", record_id, i, i - 1),
                      record_id);
    }
    for (auto k = cursor; k < r.start; ++k) {
      if (!text::is_space(chars[k])) {
        throw DataError(fmt::format("record '{}': character {} is not covered by any token", record_id, k), record_id);
      }
    }
    if (text::encode(std::u32string_view(chars).substr(r.start, r.size())) != tokens[i].text) {
      throw DataError(fmt::format("record '{}': token {} text does not match the output at [{}, {})", record_id, i,
                                  r.start, r.end),
                      record_id);
    }
    cursor = r.end;
  }
  for (auto k = cursor; k < chars.size(); ++k) {
    if (!text::is_space(chars[k])) {
      throw DataError(fmt::format("record '{}': character {} is not covered by any token", record_id, k), record_id);
    }
  }
}

std::vector<CharRange> reconstruct_offsets(const std::string& output_text, const std::vector<std::string>& tokens,
                                           const std::string& record_id) {
  const auto out = text::decode(output_text);
  std::vector<CharRange> ranges;
  ranges.reserve(tokens.size());
  std::size_t cursor = 0;
  const auto matches_at = [&](std::size_t pos, const std::u32string& t) {
    return pos + t.size() <= out.size() && std::u32string_view(out).substr(pos, t.size()) == t;
  };
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    auto t = text::decode(tokens[i]);
    for (auto& c : t) {
      if (c == 0x2581 || c == 0x0120) c = U' ';
      else if (c == 0x010A) c = U'\n';
    }
    if (t.empty()) throw DataError(fmt::format("record '{}': token {} is empty", record_id, i), record_id);
    if (matches_at(cursor, t)) {
      ranges.push_back({cursor, cursor + t.size()});
      cursor += t.size();
      continue;
    }
    std::size_t lead = 0;
    while (lead < t.size() && text::is_space(t[lead])) ++lead;
    const auto stripped = t.substr(lead);
    auto pos = cursor;
    while (pos < out.size() && text::is_space(out[pos])) ++pos;
    if (stripped.empty() || !matches_at(pos, stripped)) {
      throw DataError(fmt::format("record '{}': token {} ('{}') does not match the output at character {}", record_id,
                                  i, tokens[i], cursor),
                      record_id);
    }
    ranges.push_back({pos, pos + stripped.size()});
    cursor = pos + stripped.size();
  }
  return ranges;
}

namespace {

CharSpanSet parse_labels(const json& labels, std::size_t text_len, const std::string& id) {
  std::vector<CharRange> spans;
  for (const auto& l : labels) {
    const auto s = l.at(0).get<std::size_t>();
    const auto e = l.at(1).get<std::size_t>();
    if (s > e || e > text_len) {
      throw DataError(fmt::format("record '{}': gold span [{}, {}) outside text of length {}", id, s, e, text_len), id);
    }
    spans.push_back({s, e});
  }
  return CharSpanSet::normalized(std::move(spans), text_len);
}

std::optional<double> optional_number(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

std::string string_field(const json& j, std::initializer_list<const char*> keys, bool required, const std::string& id) {
  for (const char* k : keys) {
    if (j.contains(k) && !j.at(k).is_null()) return j.at(k).get<std::string>();
  }
  if (required) throw DataError(fmt::format("record '{}': missing field '{}'", id, *keys.begin()), id);
  return {};
}

}  // namespace

AnnotatedResponse record_from_json(const json& j) {
  AnnotatedResponse r;
  try {
    r.id = j.at("id").get<std::string>();
    r.lang = j.at("lang").get<std::string>();
    r.question = j.at("question").get<std::string>();
    r.model_id = j.value("model_id", std::string{});
    r.output_text = j.at("output_text").get<std::string>();
    for (const auto& t : j.at("tokens")) {
      Token tok;
      tok.text = t.at("text").get<std::string>();
      tok.char_range = {t.at("start").get<std::size_t>(), t.at("end").get<std::size_t>()};
      tok.logprob = optional_number(t, "logprob");
      tok.context_logprob = optional_number(t, "context_logprob");
      r.tokens.push_back(std::move(tok));
    }
    r.gold_spans = parse_labels(j.value("hard_labels", json::array()), text::length(r.output_text), r.id);
  } catch (const json::exception& e) {
    throw DataError(fmt::format("record '{}': {}", r.id, e.what()), r.id);
  }
  validate_tokens(r.output_text, r.tokens, r.id);
  return r;
}

json record_to_json(const AnnotatedResponse& r) {
  json tokens = json::array();
  for (const auto& t : r.tokens) {
    json jt{{"text", t.text}, {"start", t.char_range.start}, {"end", t.char_range.end}};
    jt["logprob"] = t.logprob ? json(*t.logprob) : json(nullptr);
    if (t.context_logprob) jt["context_logprob"] = *t.context_logprob;
    tokens.push_back(std::move(jt));
  }
  json labels = json::array();
  for (const auto& s : r.gold_spans.spans()) labels.push_back(json::array({s.start, s.end}));
  return json{{"id", r.id},
              {"lang", r.lang},
              {"question", r.question},
              {"model_id", r.model_id},
              {"output_text", r.output_text},
              {"tokens", std::move(tokens)},
              {"hard_labels", std::move(labels)}};
}

AnnotatedResponse normalize_record(const json& raw) {
  AnnotatedResponse r;
  try {
    r.id = raw.at("id").get<std::string>();
    r.lang = string_field(raw, {"lang"}, true, r.id);
    r.question = string_field(raw, {"question", "model_input"}, true, r.id);
    r.model_id = string_field(raw, {"model_id"}, false, r.id);
    r.output_text = string_field(raw, {"output_text", "model_output_text"}, true, r.id);

    std::vector<std::string> texts;
    std::vector<std::optional<double>> logprobs;
    std::vector<std::optional<double>> context;
    std::vector<CharRange> ranges;
    bool have_offsets = true;
    if (raw.contains("tokens")) {
      for (const auto& t : raw.at("tokens")) {
        texts.push_back(t.at("text").get<std::string>());
        logprobs.push_back(optional_number(t, "logprob"));
        context.push_back(optional_number(t, "context_logprob"));
        if (t.contains("start") && t.contains("end")) {
          ranges.push_back({t.at("start").get<std::size_t>(), t.at("end").get<std::size_t>()});
        } else {
          have_offsets = false;
        }
      }
    } else {
      texts = raw.at("model_output_tokens").get<std::vector<std::string>>();
      const auto logits = raw.at("model_output_logits").get<std::vector<double>>();
      if (logits.size() != texts.size()) {
        throw DataError(fmt::format("record '{}': {} tokens but {} log-probabilities", r.id, texts.size(),
                                    logits.size()),
                        r.id);
      }
      for (double v : logits) logprobs.emplace_back(v);
      context.resize(texts.size());
      have_offsets = false;
    }
    if (!have_offsets) ranges = reconstruct_offsets(r.output_text, texts, r.id);

    const auto chars = text::decode(r.output_text);
    for (std::size_t i = 0; i < texts.size(); ++i) {
      Token tok;
      tok.char_range = ranges[i];
      if (tok.char_range.end > chars.size() || tok.char_range.start >= tok.char_range.end) {
        throw DataError(fmt::format("record '{}': token {} range out of bounds", r.id, i), r.id);
      }
      tok.text = text::encode(std::u32string_view(chars).substr(tok.char_range.start, tok.char_range.size()));
      tok.logprob = logprobs[i];
      tok.context_logprob = context[i];
      r.tokens.push_back(std::move(tok));
    }
    r.gold_spans = parse_labels(raw.value("hard_labels", json::array()), chars.size(), r.id);
  } catch (const json::exception& e) {
    throw DataError(fmt::format("record '{}': {}", r.id, e.what()), r.id);
  }
  validate_tokens(r.output_text, r.tokens, r.id);
  return r;
}

std::vector<AnnotatedResponse> read_dataset(const std::filesystem::path& path) {
  std::vector<AnnotatedResponse> out;
  for (const auto& j : io::read_jsonl(path)) out.push_back(record_from_json(j));
  return out;
}

std::string serialize_dataset(const std::vector<AnnotatedResponse>& records) {
  std::string out;
  for (const auto& r : records) {
    out += io::dump(record_to_json(r));
    out += '\n';
  }
  return out;
}

}  // namespace refind
