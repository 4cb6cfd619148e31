#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "evaq/geo.hpp"
#include "evaq/trajectory.hpp"

namespace evaq {

// One representative location per observed post-event night: the staypoint
// with maximal overlap weight for that night window.
struct NightLocation {
  std::int64_t local_day = 0; // local day the night window starts on
  GeoPoint pos;
  double weight_s = 0.0;
};

std::optional<NightLocation> nightly_location(
    const std::vector<Staypoint>& sps, std::int64_t local_day,
    std::int64_t tz_offset_s);

struct EvacParams {
  double r_m = 200.0;          // home displacement threshold
  int window_days = 7;         // nights examined after the event
  double night_join_m = 150.0; // joins nightly locations into clusters
  std::int64_t tz_offset_s = 9 * 3600;
};

struct EvacRecord {
  std::string user_id;
  std::string lgu_id; // home LGU, filled by the caller/pipeline
  bool evacuated = false;
  double distance_m = 0.0; // home to dominant-cluster centroid
  std::optional<std::int64_t> first_night_away; // local day, evacuees only
  std::size_t n_observed_nights = 0;
};

// Examines the window of nights starting with the first night whose 20:00
// local start is at or after the event. Returns nullopt when no night in the
// window has any staypoint overlap (undetermined user, excluded from M).
std::optional<EvacRecord> detect_evacuation(const std::string& user_id,
                                            const GeoPoint& home,
                                            const std::vector<Staypoint>& sps,
                                            std::int64_t event_time_utc,
                                            const EvacParams& params);

// rates.csv row: per-LGU counts at the LGU's assigned intensity.
struct RateRow {
  std::string lgu_id;
  double si = 0.0;
  std::int64_t M = 0;
  std::int64_t M_star = 0;
  double rate = 0.0;
};

// Groups determined users by home LGU and attaches intensities. LGUs missing
// from the intensity map raise DataError; LGUs with zero determined users are
// omitted.
std::vector<RateRow> aggregate_rates(
    const std::map<std::string, EvacRecord>& records,
    const std::map<std::string, double>& intensity_by_lgu);

// Eq.1 pooling: intensities rounded to 0.1, pooled rate = sum M* / sum M.
struct PooledRate {
  double si = 0.0;
  std::int64_t M = 0;
  std::int64_t M_star = 0;
  double rate = 0.0;
};

std::vector<PooledRate> pool_by_intensity(const std::vector<RateRow>& rows);

// Histogram of nights-from-window-start until first_night_away, evacuees only.
std::map<int, std::int64_t> timing_histogram(
    const std::map<std::string, EvacRecord>& records, std::int64_t d0_local_day);

std::string evac_csv_string(const std::map<std::string, EvacRecord>& records,
                            const std::string& header_comment);
std::map<std::string, EvacRecord> parse_evac_csv(std::istream& in);

std::string rates_csv_string(const std::vector<RateRow>& rows,
                             const std::string& header_comment);
std::vector<RateRow> parse_rates_csv(std::istream& in);

std::map<std::string, double> parse_intensity_csv(std::istream& in);
std::string intensity_csv_string(const std::map<std::string, double>& si,
                                 const std::string& header_comment);

} // namespace evaq
