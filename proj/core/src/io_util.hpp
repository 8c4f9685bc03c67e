#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace fruitrack::io {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

/// Writes to a sibling temp file, then renames over the target.
void atomic_write(const fs::path& path, std::string_view bytes);

std::string read_file(const fs::path& path);

/// Parses a whole JSON document, reporting parse errors as DataError.
Json parse_json_file(const fs::path& path);

/// Parses a JSON-lines file. Blank lines are skipped. The callback receives
/// the parsed object and a "file:line" location string.
template <typename Fn>
void for_each_json_line(const fs::path& path, Fn&& fn);

std::string location(const fs::path& path, std::size_t line);

/// Throws DataError("<where>: <what>").
[[noreturn]] void fail(const std::string& where, const std::string& what);

template <typename T>
T get_field(const Json& j, const char* key, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end()) fail(where, std::string("missing field '") + key + "'");
  try {
    return it->template get<T>();
  } catch (const nlohmann::json::exception&) {
    fail(where, std::string("field '") + key + "' has the wrong type");
  }
}

std::vector<std::string> split_lines(const std::string& text);

template <typename Fn>
void for_each_json_line(const fs::path& path, Fn&& fn) {
  const auto lines = split_lines(read_file(path));
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string& line = lines[i];
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = location(path, i + 1);
    Json j;
    try {
      j = Json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      fail(where, std::string("malformed JSON: ") + e.what());
    }
    if (!j.is_object()) fail(where, "record is not a JSON object");
    fn(j, where);
  }
}

}  // namespace fruitrack::io
