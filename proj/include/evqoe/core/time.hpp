#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>

namespace evqoe {

using Timestamp = std::chrono::sys_seconds;
using Date = std::chrono::sys_days;
using Seconds = std::chrono::seconds;
using Minutes = std::chrono::minutes;

/// Parses `YYYY-MM-DDTHH:MM:SSZ`. Returns nullopt on any deviation from that form.
std::optional<Timestamp> parse_timestamp(std::string_view text);
std::string format_timestamp(Timestamp ts);

/// Parses `YYYY-MM-DD`.
std::optional<Date> parse_date(std::string_view text);
std::string format_date(Date d);

Date make_date(int year, unsigned month, unsigned day);

/// Calendar date containing the instant (UTC).
inline Date date_of(Timestamp ts) { return std::chrono::floor<std::chrono::days>(ts); }

/// Monday = 0 ... Sunday = 6.
int weekday_index(Date d);
int year_of(Date d);
unsigned month_of(Date d);
unsigned day_of_month(Date d);
/// 1-based ordinal day within the year (1..366).
int day_of_year(Date d);
/// ISO-8601 week number (1..53).
int iso_week(Date d);
/// Monday of the ISO week containing d.
Date week_monday(Date d);

}  // namespace evqoe
