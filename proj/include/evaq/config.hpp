#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "evaq/fragility.hpp"

namespace evaq {

enum class PopestMode { kHome, kNightFixes };

struct DistFitConfig {
  double d_min_m = 200.0;
  double d_max_m = 1e6;
  int bins_per_decade = 8;
  double si_bin_width = 0.5;
  std::size_t min_samples = 100;

  friend bool operator==(const DistFitConfig&, const DistFitConfig&) = default;
};

struct PipelineConfig {
  std::string gps_path = "gps.csv";
  std::string lgu_path = "lgu.csv";
  std::string intensity_path = "intensity.csv";
  std::string census_path; // optional
  std::string out_dir = "out";
  std::int64_t event_time_utc = 0; // 0 = unset; required by the evac stage
  std::int64_t tz_offset_s = 9 * 3600;
  double r_m = 200.0;
  int window_days = 7;
  double night_join_m = 150.0;
  double bandwidth_m = 100.0;
  double meanshift_tol_m = 1.0;
  int meanshift_max_iter = 200;
  std::size_t min_nights = 5;
  double sp_dist_m = 200.0;
  double sp_min_duration_s = 900.0;
  double sample_rate = 0.01;
  double cell_size_m = 1000.0;
  PopestMode popest_mode = PopestMode::kHome;
  FitOptions fit;
  DistFitConfig dist_fit;
  std::vector<double> rsweep_r_m{100.0, 200.0, 300.0};
  std::uint64_t seed = 1;

  friend bool operator==(const PipelineConfig&, const PipelineConfig&) = default;
};

// Empty or whitespace-only text yields all defaults. Unknown keys and bad
// values raise ConfigError naming the field.
PipelineConfig parse_config_json(const std::string& text);
PipelineConfig load_config(const std::string& path);

void validate_config(const PipelineConfig& cfg);

// Canonical echo; load(emit(cfg)) == cfg.
std::string config_json_string(const PipelineConfig& cfg);
std::string config_digest(const PipelineConfig& cfg);

} // namespace evaq
