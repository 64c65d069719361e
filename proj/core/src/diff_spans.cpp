#include "refind/diff_spans.hpp"

#include <algorithm>
#include <chrono>
#include <thread>

#include <fmt/format.h>

#include "refind/error.hpp"
#include "refind/http.hpp"
#include "refind/io.hpp"
#include "refind/prompts.hpp"
#include "refind/text.hpp"

namespace refind::diff {

using nlohmann::json;

std::size_t EditOp::length() const { return text::length(text); }

std::string build_editor_prompt(const std::vector<std::string>& passages, std::string_view output_text) {
  const auto refs = prompts::number_passages(passages);
  return prompts::fill(prompts::kEditorTemplate, {{"reference_passages", refs}, {"output", output_text}});
}

std::string build_editor_prompt(const retrieval::EvidenceSet& evidence, std::string_view output_text) {
  std::vector<std::string> passages;
  for (const auto& c : evidence.chunks) passages.push_back(c.text);
  return build_editor_prompt(passages, output_text);
}

namespace {

void push_op(EditScript& script, EditKind kind, std::size_t offset, char32_t c) {
  if (!script.empty() && script.back().kind == kind) {
    script.back().text += text::encode(std::u32string_view(&c, 1));
    return;
  }
  script.push_back({kind, offset, text::encode(std::u32string_view(&c, 1))});
}

}  // namespace

EditScript align_texts(std::string_view original, std::string_view edited) {
  const auto a = text::decode(original);
  const auto b = text::decode(edited);

  // Keeping the common prefix is always optimal and matches the
  // keep-earliest preference, so only the remainder needs the table.
  std::size_t p = 0;
  while (p < a.size() && p < b.size() && a[p] == b[p]) ++p;
  const auto n = a.size() - p;
  const auto m = b.size() - p;

  // dist[i][j]: insert+delete distance between a[p+i:] and b[p+j:].
  std::vector<std::uint32_t> dist((n + 1) * (m + 1));
  const auto at = [&](std::size_t i, std::size_t j) -> std::uint32_t& { return dist[i * (m + 1) + j]; };
  for (std::size_t i = 0; i <= n; ++i) at(i, m) = static_cast<std::uint32_t>(n - i);
  for (std::size_t j = 0; j <= m; ++j) at(n, j) = static_cast<std::uint32_t>(m - j);
  for (std::size_t i = n; i-- > 0;) {
    for (std::size_t j = m; j-- > 0;) {
      at(i, j) = a[p + i] == b[p + j] ? at(i + 1, j + 1) : 1 + std::min(at(i + 1, j), at(i, j + 1));
    }
  }

  EditScript script;
  for (std::size_t k = 0; k < p; ++k) push_op(script, EditKind::kKeep, k, a[k]);
  std::size_t i = 0, j = 0;
  while (i < n || j < m) {
    if (i < n && j < m && a[p + i] == b[p + j]) {
      push_op(script, EditKind::kKeep, p + i, a[p + i]);
      ++i;
      ++j;
    } else if (i < n && (j == m || at(i + 1, j) <= at(i, j + 1))) {
      push_op(script, EditKind::kDelete, p + i, a[p + i]);
      ++i;
    } else {
      push_op(script, EditKind::kInsert, p + i, b[p + j]);
      ++j;
    }
  }
  return script;
}

std::string apply_script(const EditScript& script, std::string_view original) {
  const auto a = text::decode(original);
  std::u32string out;
  std::size_t cursor = 0;
  for (const auto& op : script) {
    const auto chars = text::decode(op.text);
    if (op.offset != cursor) {
      throw ValidationError(fmt::format("edit op at offset {} does not continue from {}", op.offset, cursor));
    }
    switch (op.kind) {
      case EditKind::kKeep:
      case EditKind::kDelete:
        if (cursor + chars.size() > a.size() || std::u32string_view(a).substr(cursor, chars.size()) != chars) {
          throw ValidationError(fmt::format("edit op at offset {} does not match the original", op.offset));
        }
        if (op.kind == EditKind::kKeep) out += chars;
        cursor += chars.size();
        break;
      case EditKind::kInsert:
        out += chars;
        break;
    }
  }
  if (cursor != a.size()) throw ValidationError("edit script does not consume the whole original");
  return text::encode(out);
}

std::size_t edit_distance(const EditScript& script) {
  std::size_t d = 0;
  for (const auto& op : script) {
    if (op.kind != EditKind::kKeep) d += op.length();
  }
  return d;
}

CharSpanSet extract_spans(const EditScript& script, std::size_t original_len, std::size_t merge_gap) {
  std::vector<CharRange> raw;
  for (const auto& op : script) {
    if (op.kind == EditKind::kDelete) {
      raw.push_back({op.offset, op.offset + op.length()});
    } else if (op.kind == EditKind::kInsert && original_len > 0) {
      raw.push_back(op.offset > 0 ? CharRange{op.offset - 1, op.offset} : CharRange{0, 1});
    }
  }
  std::sort(raw.begin(), raw.end());
  std::vector<CharRange> merged;
  for (const auto& r : raw) {
    if (r.end > original_len) {
      throw ValidationError(fmt::format("edit span [{}, {}) exceeds text length {}", r.start, r.end, original_len));
    }
    // Overlapping or touching intervals always merge.
    if (!merged.empty() && (r.start <= merged.back().end || r.start - merged.back().end < merge_gap)) {
      merged.back().end = std::max(merged.back().end, r.end);
    } else {
      merged.push_back(r);
    }
  }
  return CharSpanSet(std::move(merged), original_len);
}

HttpEditor::HttpEditor(std::string endpoint, int timeout_seconds, int retries)
    : endpoint_(std::move(endpoint)), timeout_seconds_(timeout_seconds), retries_(std::max(0, retries)) {}

std::string HttpEditor::edit(const std::string& /*record_id*/, const std::string& prompt) {
  for (int attempt = 0;; ++attempt) {
    try {
      const auto reply = http::post_json(endpoint_, json{{"prompt", prompt}}, timeout_seconds_);
      return reply.at("text").get<std::string>();
    } catch (const TransportError&) {
      if (attempt >= retries_) throw;
      std::this_thread::sleep_for(std::chrono::milliseconds(200 * (attempt + 1)));
    } catch (const json::exception& e) {
      throw ProtocolError(fmt::format("{}: malformed editor reply: {}", endpoint_, e.what()));
    }
  }
}

RecordedEditor::RecordedEditor(std::unordered_map<std::string, std::string> edited, std::string source)
    : edited_(std::move(edited)), source_(std::move(source)) {}

RecordedEditor RecordedEditor::from_file(const std::filesystem::path& path) {
  std::unordered_map<std::string, std::string> edited;
  for (const auto& j : io::read_jsonl(path)) {
    try {
      auto id = j.at("id").get<std::string>();
      if (!edited.emplace(id, j.at("edited").get<std::string>()).second) throw DuplicateIdError(id);
    } catch (const json::exception& e) {
      throw DataError(fmt::format("{}: {}", path.string(), e.what()));
    }
  }
  return RecordedEditor(std::move(edited), path.filename().string());
}

std::string RecordedEditor::edit(const std::string& record_id, const std::string& /*prompt*/) {
  const auto it = edited_.find(record_id);
  if (it == edited_.end()) throw DataError(fmt::format("no edited output for record '{}'", record_id), record_id);
  return it->second;
}

json editor_settings_json() {
  return json{{"temperature", kEditorTemperature}, {"top_p", kEditorTopP}, {"max_tokens", kEditorMaxTokens}};
}

}  // namespace refind::diff
