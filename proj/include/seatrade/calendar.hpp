#pragma once

#include <charconv>
#include <compare>
#include <cstdio>
#include <string>
#include <string_view>

#include "seatrade/error.hpp"

namespace seatrade {

namespace detail {

inline int parse_int_field(std::string_view text, std::string_view what) {
  int value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size())
    throw DataError("malformed " + std::string(what) + ": '" + std::string(text) + "'");
  return value;
}

inline int days_in_month(int year, int month) {
  static constexpr int kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  bool leap = (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
  return month == 2 && leap ? 29 : kDays[month - 1];
}

}  // namespace detail

/// A calendar month, ordered chronologically.
struct YearMonth {
  int year = 1970;
  int month = 1;  // 1..12

  constexpr auto operator<=>(const YearMonth&) const = default;

  /// Months since year 0; consecutive months differ by one.
  [[nodiscard]] constexpr int index() const { return year * 12 + (month - 1); }

  static constexpr YearMonth from_index(int idx) { return {idx / 12, idx % 12 + 1}; }

  [[nodiscard]] constexpr YearMonth plus(int months) const { return from_index(index() + months); }

  /// Parses "YYYY-MM".
  static YearMonth parse(std::string_view text) {
    if (text.size() != 7 || text[4] != '-')
      throw DataError("malformed year_month: '" + std::string(text) + "'");
    YearMonth ym{detail::parse_int_field(text.substr(0, 4), "year"),
                 detail::parse_int_field(text.substr(5, 2), "month")};
    if (ym.month < 1 || ym.month > 12)
      throw DataError("month out of range: '" + std::string(text) + "'");
    return ym;
  }

  [[nodiscard]] std::string str() const {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02d", year, month);
    return buf;
  }
};

/// Number of months in the closed range [from, to]; zero if to < from.
constexpr int months_between(YearMonth from, YearMonth to) {
  return to < from ? 0 : to.index() - from.index() + 1;
}

/// A UTC calendar date.
struct Date {
  int year = 1970;
  int month = 1;
  int day = 1;

  constexpr auto operator<=>(const Date&) const = default;

  [[nodiscard]] constexpr YearMonth year_month() const { return {year, month}; }

  /// Parses "YYYY-MM-DD".
  static Date parse(std::string_view text) {
    if (text.size() != 10 || text[4] != '-' || text[7] != '-')
      throw DataError("malformed date: '" + std::string(text) + "'");
    Date d{detail::parse_int_field(text.substr(0, 4), "year"),
           detail::parse_int_field(text.substr(5, 2), "month"),
           detail::parse_int_field(text.substr(8, 2), "day")};
    if (d.month < 1 || d.month > 12 || d.day < 1 || d.day > detail::days_in_month(d.year, d.month))
      throw DataError("date out of range: '" + std::string(text) + "'");
    return d;
  }

  [[nodiscard]] std::string str() const {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", year, month, day);
    return buf;
  }
};

}  // namespace seatrade
