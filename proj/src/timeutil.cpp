#include "evaq/timeutil.hpp"

#include <cstdio>
#include <cstdlib>

#include "evaq/errors.hpp"

namespace evaq {

std::int64_t days_from_civil(int y, unsigned m, unsigned d) {
  // Howard Hinnant's civil calendar algorithm.
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t days, int& y, unsigned& m, unsigned& d) {
  days += 719468;
  const std::int64_t era = (days >= 0 ? days : days - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(days - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t yy = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = doy - (153 * mp + 2) / 5 + 1;
  m = mp + (mp < 10 ? 3 : -9);
  y = static_cast<int>(yy + (m <= 2));
}

std::string format_local_date(std::int64_t local_day) {
  int y;
  unsigned m, d;
  civil_from_days(local_day, y, m, d);
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", y, m, d);
  return buf;
}

std::int64_t parse_local_date(const std::string& s) {
  int y = 0;
  unsigned m = 0, d = 0;
  if (std::sscanf(s.c_str(), "%d-%u-%u", &y, &m, &d) != 3 || m < 1 || m > 12 ||
      d < 1 || d > 31) {
    throw DataError("invalid date: '" + s + "'");
  }
  return days_from_civil(y, m, d);
}

std::int64_t parse_iso8601(const std::string& s) {
  int y = 0;
  unsigned mo = 0, da = 0, h = 0, mi = 0, se = 0;
  int n = 0;
  if (std::sscanf(s.c_str(), "%d-%u-%uT%u:%u:%u%n", &y, &mo, &da, &h, &mi, &se,
                  &n) != 6 ||
      mo < 1 || mo > 12 || da < 1 || da > 31 || h > 23 || mi > 59 || se > 60) {
    throw ConfigError("invalid ISO-8601 timestamp: '" + s + "'");
  }
  std::int64_t t = days_from_civil(y, mo, da) * kSecondsPerDay + h * 3600 +
                   mi * 60 + se;
  std::string rest = s.substr(static_cast<std::size_t>(n));
  if (rest.empty() || rest == "Z") return t;
  if (rest.size() == 6 && (rest[0] == '+' || rest[0] == '-')) {
    unsigned oh = 0, om = 0;
    if (std::sscanf(rest.c_str() + 1, "%u:%u", &oh, &om) == 2 && oh <= 23 &&
        om <= 59) {
      std::int64_t off = static_cast<std::int64_t>(oh) * 3600 + om * 60;
      return rest[0] == '+' ? t - off : t + off;
    }
  }
  throw ConfigError("invalid ISO-8601 offset in '" + s + "'");
}

std::string format_iso8601_utc(std::int64_t t_utc) {
  std::int64_t day = floor_div(t_utc, kSecondsPerDay);
  std::int64_t sod = t_utc - day * kSecondsPerDay;
  int y;
  unsigned m, d;
  civil_from_days(day, y, m, d);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02lld:%02lld:%02lldZ", y, m,
                d, static_cast<long long>(sod / 3600),
                static_cast<long long>((sod % 3600) / 60),
                static_cast<long long>(sod % 60));
  return buf;
}

NightWindow night_window(std::int64_t local_day, std::int64_t tz_offset_s) {
  NightWindow w;
  w.local_day = local_day;
  w.start_utc = local_day * kSecondsPerDay + kNightStartS - tz_offset_s;
  w.end_utc = (local_day + 1) * kSecondsPerDay + kNightEndS - tz_offset_s;
  return w;
}

std::int64_t first_night_on_or_after(std::int64_t t_utc,
                                     std::int64_t tz_offset_s) {
  std::int64_t local_t = t_utc + tz_offset_s;
  // Smallest D with D*86400 + 20:00 >= local_t.
  return floor_div(local_t - kNightStartS + kSecondsPerDay - 1, kSecondsPerDay);
}

} // namespace evaq
