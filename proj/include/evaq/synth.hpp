#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "evaq/fragility.hpp"
#include "evaq/geo.hpp"

namespace evaq {

struct SynthLgu {
  std::string lgu_id;
  std::string name;
  GeoPoint centroid;
  double radius_m = 3000.0; // homes drawn uniformly in this disc
  double si = 5.0;
  std::size_t n_users = 100;
};

struct DelayLaw {
  // Mean delay nights = clamp(base - slope * si, lo, hi), geometric law
  // clamped at cap nights.
  double base = 6.0;
  double slope = 0.9;
  double lo = 0.2;
  double hi = 2.5;
  std::int64_t cap = 3;
};

struct ScenarioConfig {
  std::string name = "small";
  std::uint64_t seed = 1;
  std::int64_t event_time_utc = 1680672600; // 2023-04-05T05:30:00Z
  std::int64_t tz_offset_s = 9 * 3600;
  int days_before = 10; // observed local days before the event day
  int days_after = 9;   // observed local days after the event day
  double fixes_per_day = 40.0;
  double night_fix_share = 0.45;
  FragilityParams truth{1.73, 0.075, 0.63};
  double gamma_truth = 1.25;
  double dest_min_m = 500.0;
  double dest_max_m = 1e6;
  double gps_noise_m = 25.0;
  double sample_rate = 0.01;
  double cell_size_m = 1000.0;
  bool grid_origin_set = false;
  GeoPoint grid_origin; // defaults to the mean of the LGU centroids
  DelayLaw delay;
  std::vector<SynthLgu> lgus;
};

// Built-in configurations: "small" (quick demo) and "paper" (survey-scale;
// heavy, tens of millions of fixes).
ScenarioConfig scenario_preset(const std::string& name);

ScenarioConfig parse_scenario_json(const std::string& text);
std::string scenario_json_string(const ScenarioConfig& cfg);

struct UserTruth {
  GeoPoint home;
  std::string lgu_id;
  bool evacuated = false;
  GeoPoint dest;                 // evacuees only
  std::int64_t evac_night = 0;   // local day of first night away, evacuees only
};

struct ScenarioTruth {
  std::map<std::string, UserTruth> users;
  std::int64_t d0_local_day = 0; // first night window starting at/after event
};

// Writes gps.csv, lgu.csv, intensity.csv, ground_truth.csv, census.csv and
// scenario_used.json into outdir, and returns the per-user ground truth.
ScenarioTruth generate_scenario(const ScenarioConfig& cfg,
                                const std::filesystem::path& outdir);

std::map<std::string, UserTruth> parse_ground_truth_csv(std::istream& in);

} // namespace evaq
