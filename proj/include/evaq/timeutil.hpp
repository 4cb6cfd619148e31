#pragma once

#include <cstdint>
#include <string>

namespace evaq {

inline constexpr std::int64_t kSecondsPerDay = 86'400;
// Night window boundaries in local seconds-of-day: [20:00, 06:00 next day).
inline constexpr std::int64_t kNightStartS = 20 * 3'600;
inline constexpr std::int64_t kNightEndS = 6 * 3'600;

// Proleptic Gregorian <-> days since 1970-01-01.
std::int64_t days_from_civil(int y, unsigned m, unsigned d);
void civil_from_days(std::int64_t days, int& y, unsigned& m, unsigned& d);

// Floor division that is correct for negative numerators.
inline std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  return (a % b != 0 && ((a < 0) != (b < 0))) ? q - 1 : q;
}

// Local day number (days since epoch, local clock) of a UTC instant.
inline std::int64_t local_day_of(std::int64_t t_utc, std::int64_t tz_offset_s) {
  return floor_div(t_utc + tz_offset_s, kSecondsPerDay);
}

std::string format_local_date(std::int64_t local_day);
// Parses "YYYY-MM-DD" into a local day number.
std::int64_t parse_local_date(const std::string& s);

// ISO-8601 timestamp: "YYYY-MM-DDTHH:MM:SS" with optional "Z" or "+HH:MM"
// suffix. A bare timestamp is taken as UTC.
std::int64_t parse_iso8601(const std::string& s);
std::string format_iso8601_utc(std::int64_t t_utc);

// One night, keyed by the local date its 20:00 boundary falls on.
struct NightWindow {
  std::int64_t start_utc = 0; // inclusive
  std::int64_t end_utc = 0;   // exclusive
  std::int64_t local_day = 0;
};

NightWindow night_window(std::int64_t local_day, std::int64_t tz_offset_s);

// Local day of the first night whose 20:00 start is at or after t_utc.
std::int64_t first_night_on_or_after(std::int64_t t_utc, std::int64_t tz_offset_s);

inline std::int64_t interval_overlap_s(std::int64_t a0, std::int64_t a1,
                                       std::int64_t b0, std::int64_t b1) {
  std::int64_t lo = a0 > b0 ? a0 : b0;
  std::int64_t hi = a1 < b1 ? a1 : b1;
  return hi > lo ? hi - lo : 0;
}

} // namespace evaq
