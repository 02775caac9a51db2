#pragma once

// Minimal CSV helpers. Fields never contain commas, quotes or newlines in any
// format this library writes, so no quoting is implemented; writers reject
// such fields instead.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "mixaug/error.hpp"

namespace mixaug::csv {

inline std::vector<std::string> split(std::string_view line, char sep = ',') {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t end = line.find(sep, start);
    out.emplace_back(line.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start));
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  return out;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline const std::string& checked_field(const std::string& field) {
  if (field.find_first_of(",\"\n\r") != std::string::npos)
    throw Error(ErrorCode::invalid_argument, "field not representable in CSV: " + field);
  return field;
}

/// Shortest text that parses back to the same double.
inline std::string format_exact(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

/// Fixed 6-decimal rendering for report columns; "nan"/"inf"/"-inf" spelled out.
inline std::string format_db(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

template <typename T>
T parse_number(std::string_view text, std::string_view what) {
  text = trim(text);
  T value{};
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size())
    throw Error(ErrorCode::invalid_argument, std::string(what) + ": cannot parse '" + std::string(text) + "'");
  return value;
}

/// Reads all non-empty lines, checking the header row exactly.
inline std::vector<std::vector<std::string>> read_rows(const std::filesystem::path& path, std::string_view header) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || trim(line) != header)
    throw Error(ErrorCode::invalid_argument, path.string() + ": expected header '" + std::string(header) + "'");
  const std::size_t ncols = split(header).size();
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    auto fields = split(trim(line));
    if (fields.size() != ncols) throw Error(ErrorCode::invalid_argument, path.string() + ": bad row '" + line + "'");
    rows.push_back(std::move(fields));
  }
  return rows;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::io, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::io, "short write to " + path.string());
}

}  // namespace mixaug::csv
