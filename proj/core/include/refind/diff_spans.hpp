#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "refind/retrieval.hpp"
#include "refind/spans.hpp"

namespace refind::diff {

enum class EditKind { kKeep, kDelete, kInsert };

// One run of the edit script. `offset` is a character position in the
// original text: the first kept/deleted character, or the insertion point.
// `text` holds the kept, deleted or inserted characters (UTF-8).
struct EditOp {
  EditKind kind = EditKind::kKeep;
  std::size_t offset = 0;
  std::string text;

  std::size_t length() const;  // in characters
  friend bool operator==(const EditOp&, const EditOp&) = default;
};

using EditScript = std::vector<EditOp>;

// Generation settings recorded alongside every editor run.
inline constexpr double kEditorTemperature = 0.0;
inline constexpr double kEditorTopP = 1.0;
inline constexpr int kEditorMaxTokens = 1024;

std::string build_editor_prompt(const retrieval::EvidenceSet& evidence, std::string_view output_text);
std::string build_editor_prompt(const std::vector<std::string>& passages, std::string_view output_text);

// Shortest character-level keep/delete/insert script. Among scripts of
// minimal length it keeps characters as early as possible and, when both
// are optimal, deletes before inserting. Adjacent ops of one kind coalesce.
EditScript align_texts(std::string_view original, std::string_view edited);

// Replays the script against `original`. Throws ValidationError if the
// script does not fit the text.
std::string apply_script(const EditScript& script, std::string_view original);

// Number of deleted plus inserted characters.
std::size_t edit_distance(const EditScript& script);

// Deleted runs map to their original intervals; an insertion maps to the
// original character just before it (or the first character when inserting
// at offset 0). Intervals separated by fewer than merge_gap characters are
// merged.
CharSpanSet extract_spans(const EditScript& script, std::size_t original_len, std::size_t merge_gap = 1);

// External editor: prompt in, edited text out.
class Editor {
 public:
  virtual ~Editor() = default;
  virtual std::string edit(const std::string& record_id, const std::string& prompt) = 0;
  virtual std::string id() const = 0;
};

// POST {"prompt"} -> {"text"}.
class HttpEditor final : public Editor {
 public:
  explicit HttpEditor(std::string endpoint, int timeout_seconds = 300, int retries = 2);
  std::string edit(const std::string& record_id, const std::string& prompt) override;
  std::string id() const override { return "http:" + endpoint_; }

 private:
  std::string endpoint_;
  int timeout_seconds_;
  int retries_;
};

// Replays edited outputs recorded as line-delimited {"id", "edited"}.
class RecordedEditor final : public Editor {
 public:
  explicit RecordedEditor(std::unordered_map<std::string, std::string> edited, std::string source = "memory");
  static RecordedEditor from_file(const std::filesystem::path& path);
  std::string edit(const std::string& record_id, const std::string& prompt) override;
  std::string id() const override { return "file:" + source_; }

 private:
  std::unordered_map<std::string, std::string> edited_;
  std::string source_;
};

nlohmann::json editor_settings_json();

}  // namespace refind::diff
