#include "evaq/trajectory.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <set>

#include "evaq/csvio.hpp"
#include "evaq/errors.hpp"
#include "evaq/timeutil.hpp"

namespace evaq {

std::map<std::string, Trajectory> parse_gps_csv(std::istream& in,
                                                GpsParseStats* stats) {
  std::map<std::string, Trajectory> out;
  GpsParseStats local{};
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    strip_cr(line);
    if (is_comment_or_blank(line)) continue;
    if (!have_header) {
      if (line != "user_id,t,lat,lon") {
        throw DataError("gps.csv: missing or malformed header (expected "
                        "'user_id,t,lat,lon')");
      }
      have_header = true;
      continue;
    }
    ++local.total_rows;
    auto f = split_csv_line(line);
    if (f.size() != 4) {
      ++local.skipped_rows;
      continue;
    }
    GpsRecord rec;
    rec.user_id = f[0];
    try {
      rec.t = parse_int_strict(f[1], "t");
      rec.pos.lat = parse_double_strict(f[2], "lat");
      rec.pos.lon = parse_double_strict(f[3], "lon");
    } catch (const DataError&) {
      ++local.skipped_rows;
      continue;
    }
    if (rec.user_id.empty() || rec.t <= 0 || !valid_geopoint(rec.pos)) {
      ++local.skipped_rows;
      continue;
    }
    auto& traj = out[rec.user_id];
    traj.user_id = rec.user_id;
    traj.records.push_back(std::move(rec));
  }
  if (!have_header) {
    throw DataError("gps.csv: missing or malformed header (expected "
                    "'user_id,t,lat,lon')");
  }
  if (local.total_rows > 0 && local.skipped_rows * 2 > local.total_rows) {
    throw DataError("gps.csv: data quality failure, " +
                    std::to_string(local.skipped_rows) + " of " +
                    std::to_string(local.total_rows) + " rows malformed");
  }
  for (auto& [id, traj] : out) {
    std::stable_sort(traj.records.begin(), traj.records.end(),
                     [](const GpsRecord& a, const GpsRecord& b) {
                       return a.t < b.t;
                     });
  }
  if (stats) *stats = local;
  return out;
}

void write_gps_csv(std::ostream& out,
                   const std::map<std::string, Trajectory>& trajectories,
                   const std::string& header_comment) {
  out << header_comment << "user_id,t,lat,lon\n";
  for (const auto& [id, traj] : trajectories) {
    for (const auto& r : traj.records) {
      out << csv_quote(r.user_id) << ',' << r.t << ','
          << fmt_fixed(r.pos.lat, 7) << ',' << fmt_fixed(r.pos.lon, 7) << '\n';
    }
  }
}

static Staypoint run_staypoint(const std::vector<GpsRecord>& recs,
                               std::size_t i, std::size_t j) {
  // Trapezoidal time weights; each fix carries half of its adjacent gaps,
  // so the weights sum to the run duration.
  Staypoint sp;
  sp.t_start = recs[i].t;
  sp.t_end = recs[j].t;
  double wsum = 0.0, lat = 0.0, lon = 0.0;
  for (std::size_t k = i; k <= j; ++k) {
    double w_left = k > i ? static_cast<double>(recs[k].t - recs[k - 1].t) : 0.0;
    double w_right = k < j ? static_cast<double>(recs[k + 1].t - recs[k].t) : 0.0;
    double w = 0.5 * (w_left + w_right);
    if (w <= 0.0) w = 0.0;
    wsum += w;
    lat += w * recs[k].pos.lat;
    lon += w * recs[k].pos.lon;
  }
  if (wsum > 0.0) {
    sp.center = GeoPoint{lat / wsum, lon / wsum};
  } else {
    sp.center = recs[i].pos;
  }
  return sp;
}

std::vector<Staypoint> extract_staypoints(const Trajectory& traj,
                                          double dist_threshold_m,
                                          double min_duration_s) {
  if (!(dist_threshold_m > 0.0) || !(min_duration_s > 0.0)) {
    throw ConfigError("staypoint thresholds must be > 0");
  }
  const auto& recs = traj.records;
  std::vector<Staypoint> out;
  const std::size_t n = recs.size();
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n &&
           haversine_m(recs[j + 1].pos, recs[i].pos) <= dist_threshold_m) {
      ++j;
    }
    if (static_cast<double>(recs[j].t - recs[i].t) >= min_duration_s) {
      out.push_back(run_staypoint(recs, i, j));
      i = j + 1;
    } else {
      ++i;
    }
  }
  return out;
}

double night_overlap_s(const Staypoint& sp, std::int64_t local_day,
                       std::int64_t tz_offset_s) {
  NightWindow w = night_window(local_day, tz_offset_s);
  return static_cast<double>(
      interval_overlap_s(sp.t_start, sp.t_end, w.start_utc, w.end_utc));
}

// Local days whose night window can intersect [t_start, t_end).
static void night_day_range(const Staypoint& sp, std::int64_t tz_offset_s,
                            std::int64_t& d_lo, std::int64_t& d_hi) {
  d_lo = local_day_of(sp.t_start, tz_offset_s) - 1;
  d_hi = local_day_of(sp.t_end, tz_offset_s);
}

double total_night_overlap_s(const Staypoint& sp, std::int64_t tz_offset_s) {
  std::int64_t d_lo, d_hi;
  night_day_range(sp, tz_offset_s, d_lo, d_hi);
  double total = 0.0;
  for (std::int64_t d = d_lo; d <= d_hi; ++d) {
    total += night_overlap_s(sp, d, tz_offset_s);
  }
  return total;
}

std::vector<NightStay> nighttime_filter(const std::vector<Staypoint>& sps,
                                        std::int64_t tz_offset_s) {
  std::vector<NightStay> out;
  for (const auto& sp : sps) {
    double w = total_night_overlap_s(sp, tz_offset_s);
    if (w > 0.0) out.push_back(NightStay{sp, w});
  }
  return out;
}

std::size_t distinct_nights(const std::vector<Staypoint>& sps,
                            std::int64_t tz_offset_s) {
  std::set<std::int64_t> days;
  for (const auto& sp : sps) {
    std::int64_t d_lo, d_hi;
    night_day_range(sp, tz_offset_s, d_lo, d_hi);
    for (std::int64_t d = d_lo; d <= d_hi; ++d) {
      if (night_overlap_s(sp, d, tz_offset_s) > 0.0) days.insert(d);
    }
  }
  return days.size();
}

} // namespace evaq
