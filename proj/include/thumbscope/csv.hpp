#pragma once

// RFC 4180 CSV reading and writing with locale-independent number output.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "thumbscope/codec.hpp"
#include "thumbscope/error.hpp"

namespace thumbscope {

using CsvRow = std::vector<std::string>;

inline std::string csv_escape(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

// Shortest round-trip form is not needed; 17 significant digits are exact.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string format_optional(const std::optional<double>& v) { return v ? format_double(*v) : ""; }

inline double parse_double(const std::string& s) {
  if (s == "nan") return std::nan("");
  if (s == "inf") return INFINITY;
  if (s == "-inf") return -INFINITY;
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || s.empty()) throw ValidationError("not a number: '" + s + "'");
  return v;
}

class CsvWriter {
 public:
  explicit CsvWriter(const CsvRow& header) { row(header); }

  void row(const CsvRow& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) text_ += ',';
      text_ += csv_escape(fields[i]);
    }
    text_ += '\n';
  }

  const std::string& str() const { return text_; }

  void save(const std::filesystem::path& path) const {
    write_file_bytes(path, std::span(reinterpret_cast<const std::uint8_t*>(text_.data()), text_.size()));
  }

 private:
  std::string text_;
};

inline std::vector<CsvRow> parse_csv(std::string_view text) {
  std::vector<CsvRow> rows;
  CsvRow row;
  std::string field;
  bool quoted = false, field_started = false;
  std::size_t line = 1;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        if (c == '\n') ++line;
        field += c;
      }
      continue;
    }
    if (c == '"' && !field_started) {
      quoted = field_started = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
      field_started = false;
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      row.push_back(std::move(field));
      rows.push_back(std::move(row));
      row.clear();
      field.clear();
      field_started = false;
      ++line;
    } else {
      field += c;
      field_started = true;
    }
  }
  if (quoted) throw ValidationError("unterminated quoted field", line);
  if (field_started || !row.empty()) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

// Rows keyed by header name; every row must have the header's width.
struct CsvTable {
  CsvRow header;
  std::vector<CsvRow> rows;

  std::size_t column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    throw ValidationError("missing CSV column '" + name + "'");
  }
};

inline CsvTable read_csv(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  auto rows = parse_csv(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
  if (rows.empty()) throw ValidationError(path.string() + " has no header");
  CsvTable t{std::move(rows.front()), {}};
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].size() != t.header.size())
      throw ValidationError(path.filename().string() + ": expected " + std::to_string(t.header.size()) +
                                " fields, found " + std::to_string(rows[i].size()),
                            i + 1);
    t.rows.push_back(std::move(rows[i]));
  }
  return t;
}

// 64-bit FNV-1a, used to pin CSV schemas.
inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

}  // namespace thumbscope
