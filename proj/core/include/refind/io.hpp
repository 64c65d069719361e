#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace refind::io {

std::string read_file(const std::filesystem::path& path);

// One JSON value per non-blank line. Parse failures raise DataError naming
// the file and line number.
std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path);

// Writes to a sibling temporary file then renames over `path`, so readers
// never observe a partially written file.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

// Compact, key-sorted serialization used for every persisted record.
std::string dump(const nlohmann::json& value);

}  // namespace refind::io
