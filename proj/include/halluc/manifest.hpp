#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace halluc {

using Json = nlohmann::json;

/// One JSON object per non-blank line. Malformed lines raise kFormat with the
/// 1-based line number.
std::vector<Json> read_jsonl(const std::filesystem::path& path);
std::vector<Json> parse_jsonl(const std::string& text,
                              const std::string& source = "<memory>");

std::string to_jsonl(const std::vector<Json>& records);

/// Writes to a sibling temp file and renames it into place.
void write_text_atomic(const std::filesystem::path& path, const std::string& text);

inline void write_jsonl(const std::filesystem::path& path,
                        const std::vector<Json>& records) {
  write_text_atomic(path, to_jsonl(records));
}

std::string read_text(const std::filesystem::path& path);

}  // namespace halluc
