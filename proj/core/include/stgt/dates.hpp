#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>

namespace stgt {

/// Calendar day in UTC. All event timestamps are normalized to this.
using Date = std::chrono::sys_days;

Date make_date(int year, unsigned month, unsigned day);

/// "YYYY-MM-DD" -> Date; nullopt on malformed input.
std::optional<Date> parse_date(std::string_view s);

/// ISO-8601 timestamp -> UTC calendar day. Accepts "YYYY-MM-DD",
/// "YYYY-MM-DD[T ]HH:MM[:SS[.frac]]" with optional trailing "Z" or
/// "+HH:MM"/"-HH:MM" offset; the offset is applied before taking the date.
std::optional<Date> parse_timestamp_utc(std::string_view s);

std::string to_string(Date d); // YYYY-MM-DD

int year_of(Date d);
unsigned month_of(Date d);   // 1..12
unsigned day_of_month(Date d);
unsigned day_of_year(Date d); // 1..366
unsigned weekday_of(Date d);  // 0=Sunday .. 6=Saturday
bool is_weekend(Date d);

} // namespace stgt
