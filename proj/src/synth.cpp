#include "evaq/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "evaq/csvio.hpp"
#include "evaq/errors.hpp"
#include "evaq/popest.hpp"
#include "evaq/rng.hpp"
#include "evaq/timeutil.hpp"

namespace evaq {

namespace {

void validate(const ScenarioConfig& cfg) {
  if (cfg.lgus.empty()) throw ConfigError("scenario: lgus must be non-empty");
  std::set<std::string> ids;
  for (const auto& l : cfg.lgus) {
    if (l.lgu_id.empty()) throw ConfigError("scenario: empty lgu_id");
    if (!ids.insert(l.lgu_id).second)
      throw ConfigError("scenario: duplicate lgu_id " + l.lgu_id);
    if (!valid_geopoint(l.centroid))
      throw ConfigError("scenario: invalid centroid for " + l.lgu_id);
    if (!(l.radius_m > 0.0))
      throw ConfigError("scenario: radius_m must be > 0 for " + l.lgu_id);
    if (!(l.si >= 1.0) || !(l.si <= 7.0))
      throw ConfigError("scenario: si must be in [1.0, 7.0] for " + l.lgu_id);
  }
  if (cfg.event_time_utc <= 0) throw ConfigError("scenario: event_time must be > 0");
  if (cfg.days_before < 1) throw ConfigError("scenario: days_before must be >= 1");
  if (cfg.days_after < 1) throw ConfigError("scenario: days_after must be >= 1");
  if (!(cfg.fixes_per_day > 0.0))
    throw ConfigError("scenario: fixes_per_day must be > 0");
  if (!(cfg.night_fix_share >= 0.0) || !(cfg.night_fix_share <= 1.0))
    throw ConfigError("scenario: night_fix_share must be in [0, 1]");
  if (!(cfg.truth.sigma > 0.0) || !(cfg.truth.a > 0.0) || !(cfg.truth.a <= 1.0))
    throw ConfigError("scenario: invalid fragility truth parameters");
  if (!(cfg.dest_min_m > 0.0) || !(cfg.dest_max_m > cfg.dest_min_m))
    throw ConfigError("scenario: require 0 < dest_min_m < dest_max_m");
  if (!(cfg.gps_noise_m >= 0.0))
    throw ConfigError("scenario: gps_noise_m must be >= 0");
  if (!(cfg.sample_rate > 0.0) || !(cfg.sample_rate <= 1.0))
    throw ConfigError("scenario: sample_rate must be in (0, 1]");
  if (!(cfg.cell_size_m > 0.0))
    throw ConfigError("scenario: cell_size_m must be > 0");
  if (!(cfg.delay.lo > 0.0) || !(cfg.delay.hi >= cfg.delay.lo))
    throw ConfigError("scenario: require 0 < delay.lo <= delay.hi");
  if (cfg.delay.cap < 0) throw ConfigError("scenario: delay.cap must be >= 0");
}

GeoPoint default_grid_origin(const ScenarioConfig& cfg) {
  if (cfg.grid_origin_set) return cfg.grid_origin;
  double lat = 0.0, lon = 0.0;
  for (const auto& l : cfg.lgus) {
    lat += l.centroid.lat;
    lon += l.centroid.lon;
  }
  const double n = static_cast<double>(cfg.lgus.size());
  return GeoPoint{lat / n, lon / n};
}

std::string user_id_for(std::size_t index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "u%06zu", index);
  return buf;
}

struct Fix {
  std::int64_t t;
  GeoPoint pos;
};

} // namespace

ScenarioConfig scenario_preset(const std::string& name) {
  ScenarioConfig cfg;
  cfg.name = name;
  if (name == "small") {
    const double sis[] = {4.7, 5.1, 5.5, 5.9, 6.3, 6.7};
    for (int i = 0; i < 6; ++i) {
      SynthLgu l;
      char id[8];
      std::snprintf(id, sizeof id, "L%03d", i + 1);
      l.lgu_id = id;
      l.name = std::string("Town ") + std::to_string(i + 1);
      l.centroid = GeoPoint{35.0 + 0.25 * (i % 3), 137.0 + 0.25 * (i / 3)};
      l.radius_m = 3000.0;
      l.si = sis[i];
      l.n_users = 100;
      cfg.lgus.push_back(l);
    }
    return cfg;
  }
  if (name == "paper") {
    // Survey scale: 150 LGUs, 500-5000 users each. Heavy (tens of millions
    // of fixes); intended for full-scale runs, not for quick tests.
    cfg.days_before = 14;
    cfg.days_after = 10;
    for (int i = 0; i < 150; ++i) {
      SynthLgu l;
      char id[8];
      std::snprintf(id, sizeof id, "L%03d", i + 1);
      l.lgu_id = id;
      l.name = std::string("City ") + std::to_string(i + 1);
      l.centroid = GeoPoint{33.5 + 0.2 * (i % 15), 135.0 + 0.2 * (i / 15)};
      l.radius_m = 3000.0;
      l.si = 4.0 + 0.02 * i;
      l.n_users = 500 + splitmix64(0xC0FFEEULL + i) % 4501;
      cfg.lgus.push_back(l);
    }
    return cfg;
  }
  throw ConfigError("unknown scenario preset: " + name);
}

ScenarioConfig parse_scenario_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("scenario json: parse error: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("scenario json: top level must be an object");

  ScenarioConfig cfg;
  cfg.lgus.clear();
  try {
    for (const auto& [key, val] : j.items()) {
      if (key == "name") cfg.name = val.get<std::string>();
      else if (key == "seed") cfg.seed = val.get<std::uint64_t>();
      else if (key == "event_time") {
        if (val.is_string()) cfg.event_time_utc = parse_iso8601(val.get<std::string>());
        else cfg.event_time_utc = val.get<std::int64_t>();
      } else if (key == "tz_offset_s") cfg.tz_offset_s = val.get<std::int64_t>();
      else if (key == "days_before") cfg.days_before = val.get<int>();
      else if (key == "days_after") cfg.days_after = val.get<int>();
      else if (key == "fixes_per_day") cfg.fixes_per_day = val.get<double>();
      else if (key == "night_fix_share") cfg.night_fix_share = val.get<double>();
      else if (key == "truth") {
        for (const auto& [tk, tv] : val.items()) {
          if (tk == "mu") cfg.truth.mu = tv.get<double>();
          else if (tk == "sigma") cfg.truth.sigma = tv.get<double>();
          else if (tk == "a") cfg.truth.a = tv.get<double>();
          else throw ConfigError("scenario json: unknown key truth." + tk);
        }
      } else if (key == "gamma_truth") cfg.gamma_truth = val.get<double>();
      else if (key == "dest_min_m") cfg.dest_min_m = val.get<double>();
      else if (key == "dest_max_m") cfg.dest_max_m = val.get<double>();
      else if (key == "gps_noise_m") cfg.gps_noise_m = val.get<double>();
      else if (key == "sample_rate") cfg.sample_rate = val.get<double>();
      else if (key == "cell_size_m") cfg.cell_size_m = val.get<double>();
      else if (key == "grid_origin") {
        cfg.grid_origin_set = true;
        cfg.grid_origin.lat = val.at("lat").get<double>();
        cfg.grid_origin.lon = val.at("lon").get<double>();
      } else if (key == "delay") {
        for (const auto& [dk, dv] : val.items()) {
          if (dk == "base") cfg.delay.base = dv.get<double>();
          else if (dk == "slope") cfg.delay.slope = dv.get<double>();
          else if (dk == "lo") cfg.delay.lo = dv.get<double>();
          else if (dk == "hi") cfg.delay.hi = dv.get<double>();
          else if (dk == "cap") cfg.delay.cap = dv.get<std::int64_t>();
          else throw ConfigError("scenario json: unknown key delay." + dk);
        }
      } else if (key == "lgus") {
        if (!val.is_array()) throw ConfigError("scenario json: lgus must be an array");
        for (const auto& lj : val) {
          SynthLgu l;
          for (const auto& [lk, lv] : lj.items()) {
            if (lk == "lgu_id") l.lgu_id = lv.get<std::string>();
            else if (lk == "name") l.name = lv.get<std::string>();
            else if (lk == "centroid_lat") l.centroid.lat = lv.get<double>();
            else if (lk == "centroid_lon") l.centroid.lon = lv.get<double>();
            else if (lk == "radius_m") l.radius_m = lv.get<double>();
            else if (lk == "si") l.si = lv.get<double>();
            else if (lk == "n_users") l.n_users = lv.get<std::size_t>();
            else throw ConfigError("scenario json: unknown key lgus[]." + lk);
          }
          cfg.lgus.push_back(l);
        }
      } else {
        throw ConfigError("scenario json: unknown key " + key);
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("scenario json: invalid value: ") + e.what());
  }
  validate(cfg);
  return cfg;
}

std::string scenario_json_string(const ScenarioConfig& cfg) {
  nlohmann::ordered_json j;
  j["name"] = cfg.name;
  j["seed"] = cfg.seed;
  j["event_time"] = format_iso8601_utc(cfg.event_time_utc);
  j["tz_offset_s"] = cfg.tz_offset_s;
  j["days_before"] = cfg.days_before;
  j["days_after"] = cfg.days_after;
  j["fixes_per_day"] = cfg.fixes_per_day;
  j["night_fix_share"] = cfg.night_fix_share;
  j["truth"] = {{"mu", cfg.truth.mu}, {"sigma", cfg.truth.sigma}, {"a", cfg.truth.a}};
  j["gamma_truth"] = cfg.gamma_truth;
  j["dest_min_m"] = cfg.dest_min_m;
  j["dest_max_m"] = cfg.dest_max_m;
  j["gps_noise_m"] = cfg.gps_noise_m;
  j["sample_rate"] = cfg.sample_rate;
  j["cell_size_m"] = cfg.cell_size_m;
  if (cfg.grid_origin_set)
    j["grid_origin"] = {{"lat", cfg.grid_origin.lat}, {"lon", cfg.grid_origin.lon}};
  j["delay"] = {{"base", cfg.delay.base},
                {"slope", cfg.delay.slope},
                {"lo", cfg.delay.lo},
                {"hi", cfg.delay.hi},
                {"cap", cfg.delay.cap}};
  j["lgus"] = nlohmann::ordered_json::array();
  for (const auto& l : cfg.lgus) {
    j["lgus"].push_back({{"lgu_id", l.lgu_id},
                         {"name", l.name},
                         {"centroid_lat", l.centroid.lat},
                         {"centroid_lon", l.centroid.lon},
                         {"radius_m", l.radius_m},
                         {"si", l.si},
                         {"n_users", l.n_users}});
  }
  return j.dump(2) + "\n";
}

ScenarioTruth generate_scenario(const ScenarioConfig& cfg,
                                const std::filesystem::path& outdir) {
  validate(cfg);
  std::filesystem::create_directories(outdir);

  const std::string cfg_json = scenario_json_string(cfg);
  const std::string header = artifact_header(hex64(fnv1a64(cfg_json)));

  const std::int64_t event_day = local_day_of(cfg.event_time_utc, cfg.tz_offset_s);
  const std::int64_t d0 = first_night_on_or_after(cfg.event_time_utc, cfg.tz_offset_s);
  const std::int64_t day_lo = event_day - cfg.days_before;
  const std::int64_t day_hi = event_day + cfg.days_after;

  ScenarioTruth truth;
  truth.d0_local_day = d0;

  const std::filesystem::path gps_path = outdir / "gps.csv";
  const std::filesystem::path gps_tmp = outdir / "gps.csv.tmp";
  std::ofstream gps(gps_tmp, std::ios::binary | std::ios::trunc);
  if (!gps) throw DataError("cannot open for writing: " + gps_tmp.string());
  gps << header << "user_id,t,lat,lon\n";

  std::size_t user_index = 0;
  std::vector<Fix> fixes;
  for (const auto& lgu : cfg.lgus) {
    for (std::size_t k = 0; k < lgu.n_users; ++k, ++user_index) {
      Rng rng(substream_seed(cfg.seed, user_index));
      const std::string uid = user_id_for(user_index);

      UserTruth ut;
      ut.lgu_id = lgu.lgu_id;
      const double home_bearing = 2.0 * kPi * rng.uniform();
      const double home_dist = lgu.radius_m * std::sqrt(rng.uniform());
      ut.home = destination_point(lgu.centroid, home_bearing, home_dist);

      ut.evacuated = rng.bernoulli(frag_eval(lgu.si, cfg.truth));
      if (ut.evacuated) {
        const double dd =
            rng.truncated_pareto(cfg.gamma_truth, cfg.dest_min_m, cfg.dest_max_m);
        const double db = 2.0 * kPi * rng.uniform();
        ut.dest = destination_point(ut.home, db, dd);
        const double mean_delay = std::clamp(
            cfg.delay.base - cfg.delay.slope * lgu.si, cfg.delay.lo, cfg.delay.hi);
        ut.evac_night = d0 + rng.geometric_clamped(mean_delay, cfg.delay.cap);
      }

      const LocalProjection home_proj(ut.home);
      const LocalProjection dest_proj(ut.evacuated ? ut.dest : ut.home);

      fixes.clear();
      for (std::int64_t day = day_lo; day <= day_hi; ++day) {
        const std::int64_t n_fix = rng.poisson(cfg.fixes_per_day);
        const NightWindow nw = night_window(day, cfg.tz_offset_s);
        const std::int64_t day_start = day * kSecondsPerDay + 8 * 3600 - cfg.tz_offset_s;
        const std::int64_t day_end = day * kSecondsPerDay + 19 * 3600 - cfg.tz_offset_s;
        for (std::int64_t f = 0; f < n_fix; ++f) {
          const bool night = rng.bernoulli(cfg.night_fix_share);
          std::int64_t t;
          bool at_dest;
          if (night) {
            t = rng.uniform_int(nw.start_utc, nw.end_utc - 1);
            at_dest = ut.evacuated && day >= ut.evac_night;
          } else {
            t = rng.uniform_int(day_start, day_end - 1);
            at_dest = ut.evacuated && day >= ut.evac_night + 1;
          }
          const double dx = rng.normal(0.0, cfg.gps_noise_m);
          const double dy = rng.normal(0.0, cfg.gps_noise_m);
          const GeoPoint pos =
              at_dest ? dest_proj.from_xy(dx, dy) : home_proj.from_xy(dx, dy);
          fixes.push_back(Fix{t, pos});
        }
      }
      std::stable_sort(fixes.begin(), fixes.end(),
                       [](const Fix& a, const Fix& b) { return a.t < b.t; });

      std::string block;
      block.reserve(fixes.size() * 48);
      for (const auto& fx : fixes) {
        block += uid;
        block += ',';
        block += std::to_string(fx.t);
        block += ',';
        block += fmt_fixed(fx.pos.lat, 7);
        block += ',';
        block += fmt_fixed(fx.pos.lon, 7);
        block += '\n';
      }
      gps << block;
      truth.users.emplace(uid, ut);
    }
  }
  gps.close();
  if (!gps) throw DataError("write failed: " + gps_tmp.string());
  std::filesystem::rename(gps_tmp, gps_path);

  std::vector<LguRecord> registry;
  std::map<std::string, double> intensities;
  for (const auto& l : cfg.lgus) {
    registry.push_back(LguRecord{l.lgu_id, l.name, l.centroid, {}});
    intensities[l.lgu_id] = l.si;
  }
  std::sort(registry.begin(), registry.end(),
            [](const LguRecord& a, const LguRecord& b) { return a.lgu_id < b.lgu_id; });
  atomic_write_file((outdir / "lgu.csv").string(),
                    lgu_csv_string(registry, header));
  atomic_write_file((outdir / "intensity.csv").string(),
                    intensity_csv_string(intensities, header));

  std::string gt = header;
  gt += "user_id,home_lat,home_lon,evacuated,dest_lat,dest_lon,evac_night\n";
  for (const auto& [uid, ut] : truth.users) {
    gt += uid;
    gt += ',';
    gt += fmt_fixed(ut.home.lat, 7);
    gt += ',';
    gt += fmt_fixed(ut.home.lon, 7);
    gt += ',';
    gt += ut.evacuated ? '1' : '0';
    gt += ',';
    if (ut.evacuated) {
      gt += fmt_fixed(ut.dest.lat, 7);
      gt += ',';
      gt += fmt_fixed(ut.dest.lon, 7);
      gt += ',';
      gt += format_local_date(ut.evac_night);
    } else {
      gt += ",,";
    }
    gt += '\n';
  }
  atomic_write_file((outdir / "ground_truth.csv").string(), gt);

  GridSpec spec;
  spec.origin = default_grid_origin(cfg);
  spec.cell_size_m = cfg.cell_size_m;
  std::map<GridCell, std::int64_t> counts;
  for (const auto& [uid, ut] : truth.users)
    counts[grid_index(ut.home, cfg.cell_size_m, spec.origin)] += 1;
  PopulationGrid census;
  census.spec = spec;
  for (const auto& [cell, c] : counts)
    census.values[cell] = static_cast<double>(
        std::llround(static_cast<double>(c) / cfg.sample_rate));
  atomic_write_file((outdir / "census.csv").string(),
                    census_csv_string(census, header));

  atomic_write_file((outdir / "scenario_used.json").string(), cfg_json);
  return truth;
}

std::map<std::string, UserTruth> parse_ground_truth_csv(std::istream& in) {
  std::map<std::string, UserTruth> out;
  std::string line;
  bool saw_header = false;
  while (std::getline(in, line)) {
    strip_cr(line);
    if (is_comment_or_blank(line)) continue;
    if (!saw_header) {
      if (line !=
          "user_id,home_lat,home_lon,evacuated,dest_lat,dest_lon,evac_night")
        throw DataError("ground_truth.csv: unexpected header: " + line);
      saw_header = true;
      continue;
    }
    const auto f = split_csv_line(line);
    if (f.size() != 7)
      throw DataError("ground_truth.csv: expected 7 fields, got " +
                      std::to_string(f.size()));
    UserTruth ut;
    const std::string uid = f[0];
    ut.home.lat = parse_double_strict(f[1], "home_lat");
    ut.home.lon = parse_double_strict(f[2], "home_lon");
    const std::int64_t ev = parse_int_strict(f[3], "evacuated");
    if (ev != 0 && ev != 1)
      throw DataError("ground_truth.csv: evacuated must be 0 or 1");
    ut.evacuated = ev == 1;
    if (ut.evacuated) {
      ut.dest.lat = parse_double_strict(f[4], "dest_lat");
      ut.dest.lon = parse_double_strict(f[5], "dest_lon");
      ut.evac_night = parse_local_date(f[6]);
    } else if (!f[4].empty() || !f[5].empty() || !f[6].empty()) {
      throw DataError("ground_truth.csv: non-evacuee with destination fields");
    }
    if (!out.emplace(uid, ut).second)
      throw DataError("ground_truth.csv: duplicate user_id " + uid);
  }
  if (!saw_header) throw DataError("ground_truth.csv: missing header");
  return out;
}

} // namespace evaq
