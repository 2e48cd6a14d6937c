#pragma once

#include <chrono>
#include <string>
#include <string_view>

namespace urban3d {

/// UTC instant at one-second resolution.
using Timestamp = std::chrono::sys_seconds;

Timestamp make_utc(int year, unsigned month, unsigned day, int hour = 0, int minute = 0,
                   int second = 0);

/// Accepts "YYYY-MM-DDTHH:MM:SS" followed by "Z" or a "+HH:MM"/"-HH:MM"
/// offset; fractional seconds are rejected. Throws InputError.
Timestamp parse_rfc3339(std::string_view text);

/// "YYYY-MM-DDTHH:MM:SSZ".
std::string format_rfc3339(Timestamp t);

/// 1-based day of the year.
int day_of_year(Timestamp t);
/// Hours since 00:00 UTC of the same day, fractional.
double utc_hours(Timestamp t);
int year_of(Timestamp t);
bool is_leap_year(int year);

}  // namespace urban3d
