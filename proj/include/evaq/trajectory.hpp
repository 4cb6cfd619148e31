#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "evaq/geo.hpp"

namespace evaq {

struct GpsRecord {
  std::string user_id;
  std::int64_t t = 0; // epoch seconds UTC
  GeoPoint pos;
};

struct Trajectory {
  std::string user_id;
  std::vector<GpsRecord> records; // non-decreasing t
};

struct GpsParseStats {
  std::size_t total_rows = 0;
  std::size_t skipped_rows = 0;
};

// gps.csv: header "user_id,t,lat,lon"; malformed rows are skipped and
// counted; more than 50% malformed aborts.
std::map<std::string, Trajectory> parse_gps_csv(std::istream& in,
                                                GpsParseStats* stats = nullptr);

void write_gps_csv(std::ostream& out,
                   const std::map<std::string, Trajectory>& trajectories,
                   const std::string& header_comment);

struct Staypoint {
  GeoPoint center; // duration-weighted centroid of the member fixes
  std::int64_t t_start = 0;
  std::int64_t t_end = 0;

  double duration_s() const { return static_cast<double>(t_end - t_start); }
};

// Anchor-based sequential scan: a maximal run of consecutive fixes within
// dist_threshold_m of the run's first fix that spans at least
// min_duration_s emits one staypoint; emitted runs never overlap.
std::vector<Staypoint> extract_staypoints(const Trajectory& traj,
                                          double dist_threshold_m,
                                          double min_duration_s);

// Staypoint with its accumulated overlap against local [20:00, 06:00)
// windows.
struct NightStay {
  Staypoint sp;
  double weight_s = 0.0;
};

// Overlap of one staypoint with the night window starting on `local_day`.
double night_overlap_s(const Staypoint& sp, std::int64_t local_day,
                       std::int64_t tz_offset_s);
// Total overlap across all nights.
double total_night_overlap_s(const Staypoint& sp, std::int64_t tz_offset_s);

// Keeps staypoints that touch any night window; weight is the prorated
// overlap, so boundary-straddling stays are kept at partial weight.
std::vector<NightStay> nighttime_filter(const std::vector<Staypoint>& sps,
                                        std::int64_t tz_offset_s);

// Number of distinct local nights the staypoints touch.
std::size_t distinct_nights(const std::vector<Staypoint>& sps,
                            std::int64_t tz_offset_s);

} // namespace evaq
