#pragma once

#include <compare>
#include <string>
#include <string_view>
#include <vector>

namespace mgq {

/// Calendar date (proleptic Gregorian), ISO-8601 text form YYYY-MM-DD.
struct Date {
  int year = 1970;
  int month = 1;
  int day = 1;

  static Date parse(std::string_view text);  // throws MalformedInputError
  std::string iso() const;

  /// Days since 1970-01-01.
  long days_since_epoch() const;
  static Date from_days_since_epoch(long days);

  auto operator<=>(const Date&) const = default;
};

/// Weekdays (Mon-Fri) starting at `first`, `count` of them.
std::vector<Date> business_days(Date first, std::size_t count);

}  // namespace mgq
