#pragma once

// Small helpers shared by the file loaders: parse errors carry the line and
// the field path that failed.

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>

#include "json.hpp"
#include "rulenav/error.hpp"

namespace rulenav {

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path.string() + "' for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline void write_text_file(const std::filesystem::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot open '" + path.string() + "' for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw Error(ErrorCode::kIo, "write to '" + path.string() + "' failed");
}

inline nlohmann::json parse_json_text(std::string_view text, const std::string& what) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    std::size_t line = 1;
    const std::size_t limit = std::min<std::size_t>(e.byte, text.size());
    for (std::size_t i = 0; i < limit; ++i) {
      if (text[i] == '\n') ++line;
    }
    throw Error(ErrorCode::kParse, what + " line " + std::to_string(line) + ": " + e.what());
  }
}

template <typename T>
T get_field(const nlohmann::json& obj, const char* key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) {
    throw Error(ErrorCode::kParse, where + "." + key + ": missing field");
  }
  const nlohmann::json& v = obj.at(key);
  if constexpr (std::is_same_v<T, std::string>) {
    if (!v.is_string()) throw Error(ErrorCode::kParse, where + "." + key + ": expected a string");
  } else if constexpr (std::is_same_v<T, bool>) {
    if (!v.is_boolean()) throw Error(ErrorCode::kParse, where + "." + key + ": expected a boolean");
  } else if constexpr (std::is_integral_v<T>) {
    if (!v.is_number_integer()) {
      throw Error(ErrorCode::kParse, where + "." + key + ": expected an integer");
    }
  } else if constexpr (std::is_floating_point_v<T>) {
    if (!v.is_number()) throw Error(ErrorCode::kParse, where + "." + key + ": expected a number");
  }
  return v.get<T>();
}

template <typename T>
T get_field_or(const nlohmann::json& obj, const char* key, const std::string& where,
               T fallback) {
  if (!obj.is_object() || !obj.contains(key)) return fallback;
  return get_field<T>(obj, key, where);
}

inline const nlohmann::json& require_array(const nlohmann::json& obj, const char* key,
                                           const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) {
    throw Error(ErrorCode::kParse, where + "." + key + ": missing field");
  }
  const nlohmann::json& v = obj.at(key);
  if (!v.is_array()) throw Error(ErrorCode::kParse, where + "." + key + ": expected an array");
  return v;
}

}  // namespace rulenav
