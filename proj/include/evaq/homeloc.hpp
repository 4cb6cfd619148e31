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

struct Mode {
  GeoPoint position;
  double mass = 0.0; // sum of the weights that converged here
};

// Weighted Gaussian-kernel mean shift in a local tangent plane. Each point
// ascends the density until the shift drops below tol_m or max_iter is hit;
// converged positions within bandwidth_m/2 merge. Modes are returned sorted
// by descending mass, ties by ascending (lat, lon).
std::vector<Mode> mean_shift(const std::vector<GeoPoint>& points,
                             const std::vector<double>& weights,
                             double bandwidth_m, double tol_m = 1.0,
                             int max_iter = 200);

struct HomeEstimate {
  std::string user_id;
  GeoPoint home;
  double total_night_weight_s = 0.0;
  std::size_t n_staypoints = 0;
  std::string lgu_id; // assigned by the pipeline
};

// Home = maximal-mass mode of the nighttime staypoints. Returns nullopt
// when the user has fewer than min_nights distinct nights ("insufficient
// observation"; such users are excluded downstream).
std::optional<HomeEstimate> estimate_home(const std::string& user_id,
                                          const std::vector<NightStay>& sps,
                                          std::int64_t tz_offset_s,
                                          double bandwidth_m,
                                          std::size_t min_nights,
                                          double tol_m = 1.0,
                                          int max_iter = 200);

// homes.csv: user_id,home_lat,home_lon,lgu_id,n_staypoints,total_night_weight_s
std::string homes_csv_string(const std::map<std::string, HomeEstimate>& homes,
                             const std::string& header_comment);
std::map<std::string, HomeEstimate> parse_homes_csv(std::istream& in);

} // namespace evaq
