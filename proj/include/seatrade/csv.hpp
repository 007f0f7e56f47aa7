#pragma once

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "seatrade/error.hpp"

namespace seatrade::csv {

/// Splits one CSV record. Double-quoted fields may contain commas and "" escapes.
inline std::vector<std::string> split_record(std::string_view line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else {
      field += c;
    }
  }
  if (quoted) throw DataError("unterminated quote in CSV record");
  fields.push_back(std::move(field));
  return fields;
}

inline std::string quote_if_needed(std::string_view field) {
  if (field.find_first_of(",\"\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

/// Shortest representation that parses back to the identical double.
inline std::string format_number(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

/// Empty string for a missing (NaN or nullopt) value.
inline std::string format_optional(std::optional<double> value) {
  return value && !std::isnan(*value) ? format_number(*value) : std::string{};
}

inline std::optional<double> parse_optional_number(std::string_view text) {
  if (text.empty()) return std::nullopt;
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size())
    throw DataError("not a number: '" + std::string(text) + "'");
  return value;
}

inline double parse_number(std::string_view text) {
  auto v = parse_optional_number(text);
  if (!v) throw DataError("missing numeric field");
  return *v;
}

/// Header-indexed CSV table held in memory.
class Table {
public:
  static Table read(std::istream& in, std::string_view source = "csv") {
    Table t;
    std::string line;
    if (!std::getline(in, line)) throw DataError(std::string(source) + ": empty file");
    strip_cr(line);
    t.header_ = split_record(line);
    for (std::size_t i = 0; i < t.header_.size(); ++i) {
      if (!t.index_.emplace(t.header_[i], i).second)
        throw SchemaError(std::string(source) + ": duplicate column '" + t.header_[i] + "'");
    }
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
      ++line_no;
      strip_cr(line);
      if (line.empty()) continue;
      auto rec = split_record(line);
      if (rec.size() != t.header_.size())
        throw DataError(std::string(source) + ":" + std::to_string(line_no) + ": expected " +
                        std::to_string(t.header_.size()) + " fields, got " + std::to_string(rec.size()));
      t.rows_.push_back(std::move(rec));
    }
    return t;
  }

  static Table read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    return read(in, path);
  }

  [[nodiscard]] const std::vector<std::string>& header() const { return header_; }
  [[nodiscard]] std::size_t size() const { return rows_.size(); }
  [[nodiscard]] const std::vector<std::string>& row(std::size_t i) const { return rows_[i]; }
  [[nodiscard]] bool has(const std::string& column) const { return index_.contains(column); }

  [[nodiscard]] std::size_t column(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw SchemaError("missing column '" + name + "'");
    return it->second;
  }

  [[nodiscard]] const std::string& at(std::size_t row, const std::string& name) const {
    return rows_[row][column(name)];
  }

private:
  static void strip_cr(std::string& line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
  }

  std::vector<std::string> header_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<std::vector<std::string>> rows_;
};

inline void write_record(std::ostream& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out << ',';
    out << quote_if_needed(fields[i]);
  }
  out << '\n';
}

}  // namespace seatrade::csv
