#include "evaq/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>

#include "json.hpp"

#include "evaq/csvio.hpp"
#include "evaq/distance_dist.hpp"
#include "evaq/errors.hpp"
#include "evaq/timeutil.hpp"
#include "evaq/version.hpp"

namespace evaq {

namespace {

std::ifstream open_or_throw(const std::string& path, const char* what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(std::string(what) + ": cannot open " + path);
  return in;
}

[[noreturn]] void rethrow_with_stage(const std::string& stage,
                                     const std::exception& e) {
  const std::string msg = "stage " + stage + ": " + e.what();
  if (dynamic_cast<const ConfigError*>(&e)) throw ConfigError(msg);
  if (dynamic_cast<const DataError*>(&e)) throw DataError(msg);
  if (dynamic_cast<const FitError*>(&e)) throw FitError(msg);
  throw std::runtime_error(msg);
}

class StageRunner {
 public:
  explicit StageRunner(std::filesystem::path out_dir)
      : out_dir_(std::move(out_dir)) {}

  template <typename Fn>
  auto operator()(const std::string& stage, Fn&& fn) -> decltype(fn()) {
    try {
      return fn();
    } catch (const std::exception& e) {
      write_error(stage, e);
      rethrow_with_stage(stage, e);
    }
  }

 private:
  void write_error(const std::string& stage, const std::exception& e) const {
    try {
      nlohmann::ordered_json j;
      j["stage"] = stage;
      j["kind"] = error_kind(e);
      j["message"] = e.what();
      atomic_write_file((out_dir_ / "error.json").string(), j.dump(2) + "\n");
    } catch (...) {
      // The original error is the one worth reporting.
    }
  }

  std::filesystem::path out_dir_;
};

void check_event_in_span(const PipelineConfig& cfg,
                         const std::map<std::string, Trajectory>& gps) {
  if (cfg.event_time_utc <= 0)
    throw ConfigError("config: event_time is required");
  if (gps.empty()) throw DataError("gps: no valid trajectories");
  std::int64_t tmin = std::numeric_limits<std::int64_t>::max();
  std::int64_t tmax = std::numeric_limits<std::int64_t>::min();
  for (const auto& [uid, traj] : gps) {
    if (traj.records.empty()) continue;
    tmin = std::min(tmin, traj.records.front().t);
    tmax = std::max(tmax, traj.records.back().t);
  }
  if (cfg.event_time_utc < tmin || cfg.event_time_utc > tmax)
    throw ConfigError("config: event_time is outside the GPS observation span");
}

GeoPoint centroid_mean(const std::vector<LguRecord>& lgus) {
  double lat = 0.0, lon = 0.0;
  for (const auto& l : lgus) {
    lat += l.centroid.lat;
    lon += l.centroid.lon;
  }
  const double n = static_cast<double>(lgus.size());
  return GeoPoint{lat / n, lon / n};
}

std::map<std::string, GeoPoint> popest_locations(
    const PipelineConfig& cfg,
    const std::map<std::string, std::vector<Staypoint>>& sps,
    const std::map<std::string, HomeEstimate>& homes) {
  std::map<std::string, GeoPoint> locs;
  if (cfg.popest_mode == PopestMode::kHome) {
    for (const auto& [uid, h] : homes) locs[uid] = h.home;
    return locs;
  }
  for (const auto& [uid, user_sps] : sps) {
    const auto nights = nighttime_filter(user_sps, cfg.tz_offset_s);
    const NightStay* best = nullptr;
    for (const auto& ns : nights) {
      if (!best || ns.weight_s > best->weight_s ||
          (ns.weight_s == best->weight_s &&
           ns.sp.t_start < best->sp.t_start))
        best = &ns;
    }
    if (best) locs[uid] = best->sp.center;
  }
  return locs;
}

struct DistanceStage {
  bool done = false;
  bool collapse_done = false;
  double gamma_spread = 0.0;
  double max_l1 = 0.0;
};

} // namespace

PipelineInputs load_inputs(const PipelineConfig& cfg, bool need_census) {
  PipelineInputs in;
  {
    auto f = open_or_throw(cfg.gps_path, "gps");
    in.gps = parse_gps_csv(f, &in.gps_stats);
  }
  in.input_digests["gps"] = hex64(fnv1a64_file(cfg.gps_path));
  {
    auto f = open_or_throw(cfg.lgu_path, "lgu");
    in.lgus = parse_lgu_csv(f);
  }
  in.input_digests["lgu"] = hex64(fnv1a64_file(cfg.lgu_path));
  {
    auto f = open_or_throw(cfg.intensity_path, "intensity");
    in.intensity = parse_intensity_csv(f);
  }
  in.input_digests["intensity"] = hex64(fnv1a64_file(cfg.intensity_path));

  for (const auto& l : in.lgus)
    if (!in.intensity.count(l.lgu_id))
      throw DataError("intensity: no intensity for LGU " + l.lgu_id);
  for (const auto& [lgu, si] : in.intensity) {
    const bool known =
        std::any_of(in.lgus.begin(), in.lgus.end(),
                    [&](const LguRecord& l) { return l.lgu_id == lgu; });
    if (!known) throw DataError("intensity: unknown LGU " + lgu);
  }

  if (!cfg.census_path.empty()) {
    auto f = open_or_throw(cfg.census_path, "census");
    in.census = parse_census_csv(f);
    in.input_digests["census"] = hex64(fnv1a64_file(cfg.census_path));
  } else if (need_census) {
    throw ConfigError("config: census path is required for this operation");
  }
  return in;
}

std::map<std::string, std::vector<Staypoint>> compute_staypoints(
    const PipelineConfig& cfg, const std::map<std::string, Trajectory>& gps) {
  std::map<std::string, std::vector<Staypoint>> out;
  for (const auto& [uid, traj] : gps)
    out.emplace(uid,
                extract_staypoints(traj, cfg.sp_dist_m, cfg.sp_min_duration_s));
  return out;
}

std::map<std::string, HomeEstimate> compute_homes(
    const PipelineConfig& cfg,
    const std::map<std::string, std::vector<Staypoint>>& sps,
    const std::vector<LguRecord>& lgus) {
  std::map<std::string, HomeEstimate> out;
  for (const auto& [uid, user_sps] : sps) {
    const auto nights = nighttime_filter(user_sps, cfg.tz_offset_s);
    auto est = estimate_home(uid, nights, cfg.tz_offset_s, cfg.bandwidth_m,
                             cfg.min_nights, cfg.meanshift_tol_m,
                             cfg.meanshift_max_iter);
    if (!est) continue;
    est->lgu_id = assign_lgu(est->home, lgus);
    out.emplace(uid, std::move(*est));
  }
  return out;
}

std::map<std::string, EvacRecord> detect_all(
    const PipelineConfig& cfg,
    const std::map<std::string, std::vector<Staypoint>>& sps,
    const std::map<std::string, HomeEstimate>& homes) {
  EvacParams params;
  params.r_m = cfg.r_m;
  params.window_days = cfg.window_days;
  params.night_join_m = cfg.night_join_m;
  params.tz_offset_s = cfg.tz_offset_s;

  std::map<std::string, EvacRecord> out;
  for (const auto& [uid, home] : homes) {
    auto it = sps.find(uid);
    if (it == sps.end()) continue;
    auto rec = detect_evacuation(uid, home.home, it->second,
                                 cfg.event_time_utc, params);
    if (!rec) continue;
    rec->lgu_id = home.lgu_id;
    out.emplace(uid, std::move(*rec));
  }
  return out;
}

PipelineSummary run_pipeline(const PipelineConfig& cfg) {
  validate_config(cfg);
  const std::filesystem::path out_dir(cfg.out_dir);
  std::filesystem::create_directories(out_dir);
  std::filesystem::remove(out_dir / "error.json");

  const std::string digest = config_digest(cfg);
  const std::string header = artifact_header(digest);
  StageRunner stage(out_dir);

  atomic_write_file((out_dir / "config_used.json").string(),
                    config_json_string(cfg));

  PipelineSummary sum;
  sum.out_dir = cfg.out_dir;

  auto inputs = stage("ingest", [&] {
    auto in = load_inputs(cfg, false);
    check_event_in_span(cfg, in.gps);
    return in;
  });
  sum.n_users = inputs.gps.size();

  auto sps = stage("staypoints",
                   [&] { return compute_staypoints(cfg, inputs.gps); });

  auto homes = stage("homes", [&] {
    auto h = compute_homes(cfg, sps, inputs.lgus);
    if (h.empty())
      throw DataError("homes: no user passes the min_nights filter");
    atomic_write_file((out_dir / "homes.csv").string(),
                      homes_csv_string(h, header));
    return h;
  });
  sum.n_homes = homes.size();

  const std::int64_t d0 =
      first_night_on_or_after(cfg.event_time_utc, cfg.tz_offset_s);

  auto evac = stage("evacuation", [&] {
    auto e = detect_all(cfg, sps, homes);
    if (e.empty())
      throw DataError("evacuation: no user observed in the post-event window");
    atomic_write_file((out_dir / "evac.csv").string(),
                      evac_csv_string(e, header));
    std::string timing = header;
    timing += "night_offset,count\n";
    for (const auto& [offset, count] : timing_histogram(e, d0)) {
      timing += std::to_string(offset);
      timing += ',';
      timing += std::to_string(count);
      timing += '\n';
    }
    atomic_write_file((out_dir / "timing.csv").string(), timing);
    return e;
  });
  sum.n_determined = evac.size();
  for (const auto& [uid, rec] : evac)
    if (rec.evacuated) sum.n_evacuated += 1;

  auto rates = stage("rates", [&] {
    auto r = aggregate_rates(evac, inputs.intensity);
    atomic_write_file((out_dir / "rates.csv").string(),
                      rates_csv_string(r, header));
    return r;
  });

  stage("fragility_fit", [&] {
    std::vector<Observation> obs;
    obs.reserve(rates.size());
    for (const auto& r : rates) obs.push_back(Observation{r.si, r.M, r.M_star});
    sum.fit = fit_mle(obs, cfg.fit);

    const auto pooled = pool_by_intensity(rates);
    std::vector<double> obs_rate, pred_rate;
    obs_rate.reserve(pooled.size());
    pred_rate.reserve(pooled.size());
    for (const auto& p : pooled) {
      obs_rate.push_back(p.rate);
      pred_rate.push_back(frag_eval(p.si, sum.fit.params));
    }
    sum.R = pearson_r(obs_rate, pred_rate);
    sum.mape_pct = mape(obs_rate, pred_rate).mape_pct;

    FragilityReport rep;
    rep.params = sum.fit.params;
    rep.log_likelihood = sum.fit.log_likelihood;
    rep.R = sum.R;
    rep.mape_pct = sum.mape_pct;
    rep.n_obs = sum.fit.n_obs;
    rep.r_m = cfg.r_m;
    rep.window_days = cfg.window_days;
    atomic_write_file((out_dir / "fragility.json").string(),
                      fragility_json_string(rep));
    atomic_write_file((out_dir / "curve.csv").string(),
                      curve_csv_string(sum.fit.params, header));
    return 0;
  });

  stage("distance_fit", [&] {
    const auto& dc = cfg.dist_fit;
    std::map<int, std::vector<double>> by_key;
    std::vector<double> all;
    for (const auto& [uid, rec] : evac) {
      if (!rec.evacuated) continue;
      const double si = inputs.intensity.at(rec.lgu_id);
      const int key = static_cast<int>(std::floor(si / dc.si_bin_width));
      by_key[key].push_back(rec.distance_m);
      all.push_back(rec.distance_m);
    }
    std::size_t pooled_in_range = 0;
    for (double d : all)
      if (d >= dc.d_min_m && d <= dc.d_max_m) ++pooled_in_range;

    DistanceStage ds;
    PowerLawFit pooled_fit;
    LogBinnedPdf pooled_pdf;
    std::vector<CollapseEntry> entries;
    if (pooled_in_range >= dc.min_samples) {
      ds.done = true;
      pooled_fit = fit_power_law(all, dc.d_min_m, dc.d_max_m,
                                 dc.bins_per_decade, dc.min_samples);
      pooled_pdf = distance_pdf(all, dc.d_min_m, dc.d_max_m, dc.bins_per_decade);
      for (const auto& [key, samples] : by_key) {
        std::size_t in_range = 0;
        for (double d : samples)
          if (d >= dc.d_min_m && d <= dc.d_max_m) ++in_range;
        if (in_range < dc.min_samples) continue;
        CollapseEntry e;
        e.si_key = key;
        e.fit = fit_power_law(samples, dc.d_min_m, dc.d_max_m,
                              dc.bins_per_decade, dc.min_samples);
        e.pdf = distance_pdf(samples, dc.d_min_m, dc.d_max_m, dc.bins_per_decade);
        entries.push_back(std::move(e));
      }
      if (entries.size() >= 2) {
        ds.collapse_done = true;
        double glo = entries.front().fit.gamma, ghi = glo;
        for (const auto& e : entries) {
          glo = std::min(glo, e.fit.gamma);
          ghi = std::max(ghi, e.fit.gamma);
        }
        ds.gamma_spread = ghi - glo;
        for (std::size_t i = 0; i < entries.size(); ++i)
          for (std::size_t j = i + 1; j < entries.size(); ++j)
            ds.max_l1 = std::max(
                ds.max_l1, l1_distance(entries[i].pdf, entries[j].pdf));
      }
    }
    atomic_write_file(
        (out_dir / "distpdf.csv").string(),
        distpdf_csv_string(ds.done ? &pooled_pdf : nullptr, entries,
                           dc.si_bin_width, header));
    atomic_write_file(
        (out_dir / "powerlaw.json").string(),
        powerlaw_json_string(ds.done ? &pooled_fit : nullptr, entries,
                             dc.si_bin_width));
    sum.distance_fit_done = ds.done;
    sum.collapse_done = ds.collapse_done;
    sum.collapse_gamma_spread = ds.gamma_spread;
    sum.collapse_max_l1 = ds.max_l1;
    return 0;
  });

  stage("popest", [&] {
    GridSpec spec;
    if (inputs.census) {
      spec = inputs.census->spec;
      if (spec.cell_size_m != cfg.cell_size_m)
        throw ConfigError(
            "config: cell_size_m does not match the census grid");
    } else {
      spec.origin = centroid_mean(inputs.lgus);
      spec.cell_size_m = cfg.cell_size_m;
    }
    const auto locs = popest_locations(cfg, sps, homes);
    if (locs.empty()) throw DataError("popest: no user locations");
    const auto grid = estimate_population_grid(locs, spec, cfg.sample_rate);
    if (inputs.census)
      sum.census_correlation = census_correlation(grid, *inputs.census);
    atomic_write_file(
        (out_dir / "popgrid.csv").string(),
        popgrid_csv_string(grid, inputs.census ? &*inputs.census : nullptr,
                           header));
    return 0;
  });

  stage("manifest", [&] {
    nlohmann::ordered_json j;
    j["tool"] = "evaq";
    j["version"] = kVersion;
    j["config_digest"] = digest;
    j["inputs"] = nlohmann::ordered_json::object();
    for (const auto& [label, dg] : inputs.input_digests) j["inputs"][label] = dg;
    j["parameters"] = nlohmann::ordered_json::parse(config_json_string(cfg));
    j["counts"] = {{"users", sum.n_users},
                   {"gps_rows", inputs.gps_stats.total_rows},
                   {"gps_rows_skipped", inputs.gps_stats.skipped_rows},
                   {"homes", sum.n_homes},
                   {"determined", sum.n_determined},
                   {"evacuated", sum.n_evacuated}};
    j["results"] = {{"mu", sum.fit.params.mu},
                    {"sigma", sum.fit.params.sigma},
                    {"a", sum.fit.params.a},
                    {"R", sum.R},
                    {"MAPE", sum.mape_pct}};
    if (sum.census_correlation)
      j["results"]["census_correlation"] = *sum.census_correlation;
    if (sum.collapse_done) {
      j["results"]["collapse_gamma_spread"] = sum.collapse_gamma_spread;
      j["results"]["collapse_max_l1"] = sum.collapse_max_l1;
    }
    j["artifacts"] = nlohmann::ordered_json::object();
    for (const char* name :
         {"config_used.json", "homes.csv", "evac.csv", "timing.csv",
          "rates.csv", "fragility.json", "curve.csv", "distpdf.csv",
          "powerlaw.json", "popgrid.csv"}) {
      const auto p = out_dir / name;
      if (std::filesystem::exists(p))
        j["artifacts"][name] = hex64(fnv1a64_file(p.string()));
    }
    atomic_write_file((out_dir / "manifest.json").string(), j.dump(2) + "\n");
    return 0;
  });

  return sum;
}

std::vector<RsweepRow> r_sensitivity_sweep(const PipelineConfig& cfg) {
  validate_config(cfg);
  auto inputs = load_inputs(cfg, false);
  check_event_in_span(cfg, inputs.gps);
  const auto sps = compute_staypoints(cfg, inputs.gps);
  const auto homes = compute_homes(cfg, sps, inputs.lgus);
  if (homes.empty())
    throw DataError("homes: no user passes the min_nights filter");

  std::vector<RsweepRow> rows;
  for (double r : cfg.rsweep_r_m) {
    PipelineConfig c = cfg;
    c.r_m = r;
    const auto evac = detect_all(c, sps, homes);
    if (evac.empty())
      throw DataError("evacuation: no user observed in the post-event window");
    const auto rates = aggregate_rates(evac, inputs.intensity);

    std::vector<Observation> obs;
    obs.reserve(rates.size());
    for (const auto& row : rates)
      obs.push_back(Observation{row.si, row.M, row.M_star});
    const FitResult fit = fit_mle(obs, cfg.fit);

    const auto pooled = pool_by_intensity(rates);
    std::vector<double> obs_rate, pred_rate;
    for (const auto& p : pooled) {
      obs_rate.push_back(p.rate);
      pred_rate.push_back(frag_eval(p.si, fit.params));
    }

    RsweepRow out;
    out.r_m = r;
    for (const auto& row : rates) {
      out.M += row.M;
      out.M_star += row.M_star;
    }
    out.params = fit.params;
    out.R = pearson_r(obs_rate, pred_rate);
    out.mape_pct = mape(obs_rate, pred_rate).mape_pct;
    rows.push_back(out);
  }
  return rows;
}

std::string rsweep_csv_string(const std::vector<RsweepRow>& rows,
                              const std::string& header_comment) {
  std::string out = header_comment;
  out += "r_m,M,M_star,mu,sigma,a,R,MAPE\n";
  for (const auto& r : rows) {
    out += fmt_general(r.r_m);
    out += ',';
    out += std::to_string(r.M);
    out += ',';
    out += std::to_string(r.M_star);
    out += ',';
    out += fmt_general(r.params.mu);
    out += ',';
    out += fmt_general(r.params.sigma);
    out += ',';
    out += fmt_general(r.params.a);
    out += ',';
    out += fmt_general(r.R);
    out += ',';
    out += fmt_general(r.mape_pct);
    out += '\n';
  }
  return out;
}

std::map<std::string, double> parse_population_csv(std::istream& in) {
  std::map<std::string, double> out;
  std::string line;
  bool saw_header = false;
  while (std::getline(in, line)) {
    strip_cr(line);
    if (is_comment_or_blank(line)) continue;
    if (!saw_header) {
      if (line != "lgu_id,population")
        throw DataError("population.csv: unexpected header: " + line);
      saw_header = true;
      continue;
    }
    const auto f = split_csv_line(line);
    if (f.size() != 2)
      throw DataError("population.csv: expected 2 fields, got " +
                      std::to_string(f.size()));
    const double pop = parse_double_strict(f[1], "population");
    if (pop < 0.0) throw DataError("population.csv: negative population");
    if (!out.emplace(f[0], pop).second)
      throw DataError("population.csv: duplicate lgu_id " + f[0]);
  }
  if (!saw_header) throw DataError("population.csv: missing header");
  return out;
}

} // namespace evaq
