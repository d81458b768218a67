#pragma once

#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "ccopf/errors.hpp"

namespace ccopf::detail {

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

inline std::vector<std::string> split_fields(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.emplace_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

/// Line-oriented CSV reader: skips blank lines and `#` comments, checks the
/// header row, and tracks line numbers for diagnostics.
class CsvReader {
 public:
  CsvReader(std::istream& in, std::string source) : in_(in), source_(std::move(source)) {}

  void expect_header(const std::vector<std::string>& columns) {
    std::vector<std::string> row;
    if (!next(row)) throw ParseError(source_ + ": missing header row");
    if (row.size() < columns.size()) {
      throw ParseError(where() + ": expected header starting with '" + columns.front() + "'");
    }
    for (std::size_t i = 0; i < columns.size(); ++i) {
      if (row[i] != columns[i]) {
        throw ParseError(where() + ": header column " + std::to_string(i + 1) + " is '" + row[i] +
                         "', expected '" + columns[i] + "'");
      }
    }
    width_ = row.size();
  }

  bool next(std::vector<std::string>& row) {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      const auto t = trim(line);
      if (t.empty() || t.front() == '#') continue;
      row = split_fields(t);
      if (width_ != 0 && row.size() != width_) {
        throw ParseError(where() + ": expected " + std::to_string(width_) + " columns, found " +
                         std::to_string(row.size()));
      }
      return true;
    }
    return false;
  }

  [[nodiscard]] std::string where() const { return source_ + ":" + std::to_string(line_no_); }

  [[nodiscard]] double to_double(const std::string& field, std::string_view column) const {
    double value = 0.0;
    const auto* begin = field.data();
    const auto* end = begin + field.size();
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    if (field.empty() || ec != std::errc{} || ptr != end || !std::isfinite(value)) {
      throw ParseError(where() + ": column '" + std::string(column) + "' has invalid number '" +
                       field + "'");
    }
    return value;
  }

  [[nodiscard]] double to_double_or(const std::string& field, std::string_view column,
                                    double fallback) const {
    return field.empty() ? fallback : to_double(field, column);
  }

  [[nodiscard]] long long to_int(const std::string& field, std::string_view column) const {
    long long value = 0;
    const auto* begin = field.data();
    const auto* end = begin + field.size();
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    if (field.empty() || ec != std::errc{} || ptr != end) {
      throw ParseError(where() + ": column '" + std::string(column) + "' has invalid integer '" +
                       field + "'");
    }
    return value;
  }

  [[nodiscard]] bool to_bool(const std::string& field, std::string_view column) const {
    if (field == "1" || field == "true") return true;
    if (field == "0" || field == "false") return false;
    throw ParseError(where() + ": column '" + std::string(column) + "' has invalid flag '" + field +
                     "'");
  }

 private:
  std::istream& in_;
  std::string source_;
  std::size_t line_no_ = 0;
  std::size_t width_ = 0;
};

/// Shortest decimal text that round-trips to the same double.
inline std::string format_number(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc{}) return "nan";
  return std::string(buf, ptr);
}

/// Fixed-point text with the given number of decimals.
inline std::string format_fixed(double value, int decimals) {
  char buf[64];
  const auto [ptr, ec] =
      std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::fixed, decimals);
  if (ec != std::errc{}) return "nan";
  return std::string(buf, ptr);
}

inline void write_row(std::ostream& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i != 0) out << ',';
    out << fields[i];
  }
  out << '\n';
}

}  // namespace ccopf::detail
