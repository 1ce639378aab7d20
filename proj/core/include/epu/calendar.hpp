#pragma once

#include <compare>
#include <optional>
#include <string>
#include <string_view>

namespace epu {

/// Proleptic Gregorian calendar date, always valid once constructed through parse_date().
struct Date {
  int year = 1970;
  unsigned month = 1;
  unsigned day = 1;

  auto operator<=>(const Date&) const = default;
};

struct YearMonth {
  int year = 1970;
  unsigned month = 1;

  auto operator<=>(const YearMonth&) const = default;
};

bool is_valid_date(int year, unsigned month, unsigned day);

/// Parses "YYYY-MM-DD". A trailing ISO-8601 time part ("THH:MM...") is accepted and ignored.
std::optional<Date> parse_date(std::string_view text);

/// Parses "YYYY-MM".
std::optional<YearMonth> parse_year_month(std::string_view text);

inline YearMonth month_of(const Date& d) { return {d.year, d.month}; }

std::string to_string(const Date& d);
std::string to_string(const YearMonth& m);

}  // namespace epu
