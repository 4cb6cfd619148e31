#include "evaq/config.hpp"

#include <cmath>

#include "json.hpp"

#include "evaq/csvio.hpp"
#include "evaq/errors.hpp"
#include "evaq/timeutil.hpp"

namespace evaq {

namespace {

bool whitespace_only(const std::string& s) {
  for (char c : s)
    if (c != ' ' && c != '\t' && c != '\n' && c != '\r') return false;
  return true;
}

void require(bool ok, const char* field, const char* what) {
  if (!ok) throw ConfigError(std::string("config: ") + field + " " + what);
}

FitOptions parse_fit(const nlohmann::json& j) {
  FitOptions f;
  for (const auto& [key, val] : j.items()) {
    if (key == "mu_lo") f.mu_lo = val.get<double>();
    else if (key == "mu_hi") f.mu_hi = val.get<double>();
    else if (key == "mu_steps") f.mu_steps = val.get<int>();
    else if (key == "sigma_lo") f.sigma_lo = val.get<double>();
    else if (key == "sigma_hi") f.sigma_hi = val.get<double>();
    else if (key == "sigma_steps") f.sigma_steps = val.get<int>();
    else if (key == "a_lo") f.a_lo = val.get<double>();
    else if (key == "a_hi") f.a_hi = val.get<double>();
    else if (key == "a_steps") f.a_steps = val.get<int>();
    else if (key == "mu_min") f.mu_min = val.get<double>();
    else if (key == "mu_max") f.mu_max = val.get<double>();
    else if (key == "sigma_min") f.sigma_min = val.get<double>();
    else if (key == "sigma_max") f.sigma_max = val.get<double>();
    else if (key == "a_min") f.a_min = val.get<double>();
    else if (key == "a_max") f.a_max = val.get<double>();
    else if (key == "nm_max_iter") f.nm_max_iter = val.get<int>();
    else if (key == "nm_starts") f.nm_starts = val.get<int>();
    else throw ConfigError("config: unknown key fit." + key);
  }
  return f;
}

DistFitConfig parse_dist_fit(const nlohmann::json& j) {
  DistFitConfig d;
  for (const auto& [key, val] : j.items()) {
    if (key == "d_min_m") d.d_min_m = val.get<double>();
    else if (key == "d_max_m") d.d_max_m = val.get<double>();
    else if (key == "bins_per_decade") d.bins_per_decade = val.get<int>();
    else if (key == "si_bin_width") d.si_bin_width = val.get<double>();
    else if (key == "min_samples") d.min_samples = val.get<std::size_t>();
    else throw ConfigError("config: unknown key dist_fit." + key);
  }
  return d;
}

} // namespace

PipelineConfig parse_config_json(const std::string& text) {
  PipelineConfig cfg;
  if (whitespace_only(text)) return cfg;

  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: parse error: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config: top level must be an object");

  std::string current;
  try {
    for (const auto& [key, val] : j.items()) {
      current = key;
      if (key == "gps") cfg.gps_path = val.get<std::string>();
      else if (key == "lgu") cfg.lgu_path = val.get<std::string>();
      else if (key == "intensity") cfg.intensity_path = val.get<std::string>();
      else if (key == "census") cfg.census_path = val.get<std::string>();
      else if (key == "out_dir") cfg.out_dir = val.get<std::string>();
      else if (key == "event_time") {
        if (val.is_string()) cfg.event_time_utc = parse_iso8601(val.get<std::string>());
        else cfg.event_time_utc = val.get<std::int64_t>();
      } else if (key == "tz_offset_s") cfg.tz_offset_s = val.get<std::int64_t>();
      else if (key == "r_m") cfg.r_m = val.get<double>();
      else if (key == "window_days") cfg.window_days = val.get<int>();
      else if (key == "night_join_m") cfg.night_join_m = val.get<double>();
      else if (key == "bandwidth_m") cfg.bandwidth_m = val.get<double>();
      else if (key == "meanshift_tol_m") cfg.meanshift_tol_m = val.get<double>();
      else if (key == "meanshift_max_iter") cfg.meanshift_max_iter = val.get<int>();
      else if (key == "min_nights") cfg.min_nights = val.get<std::size_t>();
      else if (key == "sp_dist_m") cfg.sp_dist_m = val.get<double>();
      else if (key == "sp_min_duration_s") cfg.sp_min_duration_s = val.get<double>();
      else if (key == "sample_rate") cfg.sample_rate = val.get<double>();
      else if (key == "cell_size_m") cfg.cell_size_m = val.get<double>();
      else if (key == "popest_mode") {
        const std::string m = val.get<std::string>();
        if (m == "home") cfg.popest_mode = PopestMode::kHome;
        else if (m == "night_fixes") cfg.popest_mode = PopestMode::kNightFixes;
        else throw ConfigError("config: popest_mode must be 'home' or 'night_fixes'");
      } else if (key == "fit") cfg.fit = parse_fit(val);
      else if (key == "dist_fit") cfg.dist_fit = parse_dist_fit(val);
      else if (key == "rsweep_r_m") cfg.rsweep_r_m = val.get<std::vector<double>>();
      else if (key == "seed") cfg.seed = val.get<std::uint64_t>();
      else throw ConfigError("config: unknown key " + key);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config: invalid value for " + current + ": " + e.what());
  }
  validate_config(cfg);
  return cfg;
}

PipelineConfig load_config(const std::string& path) {
  return parse_config_json(read_file(path));
}

void validate_config(const PipelineConfig& cfg) {
  require(!cfg.gps_path.empty(), "gps", "must be non-empty");
  require(!cfg.lgu_path.empty(), "lgu", "must be non-empty");
  require(!cfg.intensity_path.empty(), "intensity", "must be non-empty");
  require(!cfg.out_dir.empty(), "out_dir", "must be non-empty");
  require(cfg.event_time_utc >= 0, "event_time", "must be >= 0");
  require(std::llabs(cfg.tz_offset_s) <= 18 * 3600, "tz_offset_s",
          "must be within +/-18 hours");
  require(cfg.r_m > 0.0, "r_m", "must be > 0");
  require(cfg.window_days >= 1, "window_days", "must be >= 1");
  require(cfg.night_join_m > 0.0, "night_join_m", "must be > 0");
  require(cfg.bandwidth_m > 0.0, "bandwidth_m", "must be > 0");
  require(cfg.meanshift_tol_m > 0.0, "meanshift_tol_m", "must be > 0");
  require(cfg.meanshift_max_iter >= 1, "meanshift_max_iter", "must be >= 1");
  require(cfg.min_nights >= 1, "min_nights", "must be >= 1");
  require(cfg.sp_dist_m > 0.0, "sp_dist_m", "must be > 0");
  require(cfg.sp_min_duration_s > 0.0, "sp_min_duration_s", "must be > 0");
  require(cfg.sample_rate > 0.0 && cfg.sample_rate <= 1.0, "sample_rate",
          "must be in (0, 1]");
  require(cfg.cell_size_m > 0.0, "cell_size_m", "must be > 0");
  require(cfg.fit.mu_steps >= 2, "fit.mu_steps", "must be >= 2");
  require(cfg.fit.sigma_steps >= 2, "fit.sigma_steps", "must be >= 2");
  require(cfg.fit.a_steps >= 2, "fit.a_steps", "must be >= 2");
  require(cfg.fit.mu_hi > cfg.fit.mu_lo, "fit.mu_hi", "must be > fit.mu_lo");
  require(cfg.fit.sigma_lo > 0.0, "fit.sigma_lo", "must be > 0");
  require(cfg.fit.sigma_hi > cfg.fit.sigma_lo, "fit.sigma_hi",
          "must be > fit.sigma_lo");
  require(cfg.fit.a_lo > 0.0, "fit.a_lo", "must be > 0");
  require(cfg.fit.a_hi > cfg.fit.a_lo && cfg.fit.a_hi <= 1.0, "fit.a_hi",
          "must be in (fit.a_lo, 1]");
  require(cfg.fit.nm_max_iter >= 1, "fit.nm_max_iter", "must be >= 1");
  require(cfg.fit.nm_starts >= 1, "fit.nm_starts", "must be >= 1");
  require(cfg.dist_fit.d_min_m > 0.0, "dist_fit.d_min_m", "must be > 0");
  require(cfg.dist_fit.d_max_m > cfg.dist_fit.d_min_m, "dist_fit.d_max_m",
          "must be > dist_fit.d_min_m");
  require(cfg.dist_fit.bins_per_decade >= 1, "dist_fit.bins_per_decade",
          "must be >= 1");
  require(cfg.dist_fit.si_bin_width > 0.0, "dist_fit.si_bin_width",
          "must be > 0");
  require(cfg.dist_fit.min_samples >= 2, "dist_fit.min_samples",
          "must be >= 2");
  require(!cfg.rsweep_r_m.empty(), "rsweep_r_m", "must be non-empty");
  for (double r : cfg.rsweep_r_m)
    require(r > 0.0, "rsweep_r_m", "entries must be > 0");
}

std::string config_json_string(const PipelineConfig& cfg) {
  nlohmann::ordered_json j;
  j["gps"] = cfg.gps_path;
  j["lgu"] = cfg.lgu_path;
  j["intensity"] = cfg.intensity_path;
  j["census"] = cfg.census_path;
  j["out_dir"] = cfg.out_dir;
  if (cfg.event_time_utc > 0)
    j["event_time"] = format_iso8601_utc(cfg.event_time_utc);
  else
    j["event_time"] = cfg.event_time_utc;
  j["tz_offset_s"] = cfg.tz_offset_s;
  j["r_m"] = cfg.r_m;
  j["window_days"] = cfg.window_days;
  j["night_join_m"] = cfg.night_join_m;
  j["bandwidth_m"] = cfg.bandwidth_m;
  j["meanshift_tol_m"] = cfg.meanshift_tol_m;
  j["meanshift_max_iter"] = cfg.meanshift_max_iter;
  j["min_nights"] = cfg.min_nights;
  j["sp_dist_m"] = cfg.sp_dist_m;
  j["sp_min_duration_s"] = cfg.sp_min_duration_s;
  j["sample_rate"] = cfg.sample_rate;
  j["cell_size_m"] = cfg.cell_size_m;
  j["popest_mode"] =
      cfg.popest_mode == PopestMode::kHome ? "home" : "night_fixes";
  j["fit"] = {{"mu_lo", cfg.fit.mu_lo},
              {"mu_hi", cfg.fit.mu_hi},
              {"mu_steps", cfg.fit.mu_steps},
              {"sigma_lo", cfg.fit.sigma_lo},
              {"sigma_hi", cfg.fit.sigma_hi},
              {"sigma_steps", cfg.fit.sigma_steps},
              {"a_lo", cfg.fit.a_lo},
              {"a_hi", cfg.fit.a_hi},
              {"a_steps", cfg.fit.a_steps},
              {"mu_min", cfg.fit.mu_min},
              {"mu_max", cfg.fit.mu_max},
              {"sigma_min", cfg.fit.sigma_min},
              {"sigma_max", cfg.fit.sigma_max},
              {"a_min", cfg.fit.a_min},
              {"a_max", cfg.fit.a_max},
              {"nm_max_iter", cfg.fit.nm_max_iter},
              {"nm_starts", cfg.fit.nm_starts}};
  j["dist_fit"] = {{"d_min_m", cfg.dist_fit.d_min_m},
                   {"d_max_m", cfg.dist_fit.d_max_m},
                   {"bins_per_decade", cfg.dist_fit.bins_per_decade},
                   {"si_bin_width", cfg.dist_fit.si_bin_width},
                   {"min_samples", cfg.dist_fit.min_samples}};
  j["rsweep_r_m"] = cfg.rsweep_r_m;
  j["seed"] = cfg.seed;
  return j.dump(2) + "\n";
}

std::string config_digest(const PipelineConfig& cfg) {
  return hex64(fnv1a64(config_json_string(cfg)));
}

} // namespace evaq
