#include "halluc/manifest.hpp"

#include <fstream>
#include <sstream>

#include "halluc/error.hpp"

namespace halluc {

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kStorage, "cannot open: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::vector<Json> parse_jsonl(const std::string& text, const std::string& source) {
  std::vector<Json> out;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Json record;
    try {
      record = Json::parse(line);
    } catch (const Json::parse_error& e) {
      fail(ErrorCode::kFormat,
           source + ":" + std::to_string(line_no) + ": " + e.what());
    }
    if (!record.is_object()) {
      fail(ErrorCode::kFormat,
           source + ":" + std::to_string(line_no) + ": record is not an object");
    }
    out.push_back(std::move(record));
  }
  return out;
}

std::vector<Json> read_jsonl(const std::filesystem::path& path) {
  return parse_jsonl(read_text(path), path.string());
}

std::string to_jsonl(const std::vector<Json>& records) {
  std::string out;
  for (const auto& r : records) {
    out += r.dump();
    out += '\n';
  }
  return out;
}

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::kStorage, "cannot open for writing: " + tmp.string());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    out.flush();
    if (!out) fail(ErrorCode::kStorage, "write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    fail(ErrorCode::kStorage, "rename to " + path.string() + " failed: " + ec.message());
  }
}

}  // namespace halluc
