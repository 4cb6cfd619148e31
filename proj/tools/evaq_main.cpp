#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "evaq/config.hpp"
#include "evaq/csvio.hpp"
#include "evaq/distance_dist.hpp"
#include "evaq/errors.hpp"
#include "evaq/evac.hpp"
#include "evaq/fragility.hpp"
#include "evaq/homeloc.hpp"
#include "evaq/pipeline.hpp"
#include "evaq/popest.hpp"
#include "evaq/synth.hpp"
#include "evaq/timeutil.hpp"
#include "evaq/version.hpp"

namespace {

using namespace evaq;

namespace fs = std::filesystem;

struct CfgFlags {
  std::optional<std::string> config_path;
  std::optional<std::string> gps, lgu, intensity, census, out_dir;
  std::optional<std::string> event_time, popest_mode;
  std::optional<double> r_m, night_join_m, bandwidth_m, sp_dist_m,
      sp_min_duration_s, sample_rate, cell_size_m;
  std::optional<int> window_days;
  std::optional<std::int64_t> tz_offset_s;
  std::optional<std::size_t> min_nights;
  std::optional<std::vector<double>> rsweep;
};

std::int64_t parse_event_flag(const std::string& s) {
  if (!s.empty() && s.find_first_not_of("0123456789") == std::string::npos)
    return std::stoll(s);
  return parse_iso8601(s);
}

void add_common_flags(CLI::App* cmd, CfgFlags& f) {
  cmd->add_option("--config", f.config_path, "JSON config file");
  cmd->add_option("--gps", f.gps, "gps.csv path");
  cmd->add_option("--lgu", f.lgu, "lgu.csv path");
  cmd->add_option("--intensity", f.intensity, "intensity.csv path");
  cmd->add_option("--census", f.census, "census.csv path");
  cmd->add_option("--out-dir", f.out_dir, "output directory");
  cmd->add_option("--event-time", f.event_time,
                  "event time (ISO-8601 or epoch seconds)");
  cmd->add_option("--tz-offset-s", f.tz_offset_s, "local timezone offset");
  cmd->add_option("--r-m", f.r_m, "evacuation distance threshold");
  cmd->add_option("--window-days", f.window_days, "post-event nights examined");
  cmd->add_option("--night-join-m", f.night_join_m,
                  "nightly location grouping radius");
  cmd->add_option("--bandwidth-m", f.bandwidth_m, "mean-shift bandwidth");
  cmd->add_option("--min-nights", f.min_nights,
                  "distinct nights required for a home estimate");
  cmd->add_option("--sp-dist-m", f.sp_dist_m, "staypoint distance threshold");
  cmd->add_option("--sp-min-duration-s", f.sp_min_duration_s,
                  "staypoint minimum duration");
  cmd->add_option("--sample-rate", f.sample_rate, "panel sample rate");
  cmd->add_option("--cell-size-m", f.cell_size_m, "population grid cell size");
  cmd->add_option("--popest-mode", f.popest_mode,
                  "population assignment: home or night_fixes");
  cmd->add_option("--rsweep-r-m", f.rsweep,
                  "radii for the r-sensitivity sweep");
}

PipelineConfig resolve_config(const CfgFlags& f) {
  PipelineConfig cfg =
      f.config_path ? load_config(*f.config_path) : PipelineConfig{};
  if (f.gps) cfg.gps_path = *f.gps;
  if (f.lgu) cfg.lgu_path = *f.lgu;
  if (f.intensity) cfg.intensity_path = *f.intensity;
  if (f.census) cfg.census_path = *f.census;
  if (f.out_dir) cfg.out_dir = *f.out_dir;
  if (f.event_time) cfg.event_time_utc = parse_event_flag(*f.event_time);
  if (f.tz_offset_s) cfg.tz_offset_s = *f.tz_offset_s;
  if (f.r_m) cfg.r_m = *f.r_m;
  if (f.window_days) cfg.window_days = *f.window_days;
  if (f.night_join_m) cfg.night_join_m = *f.night_join_m;
  if (f.bandwidth_m) cfg.bandwidth_m = *f.bandwidth_m;
  if (f.min_nights) cfg.min_nights = *f.min_nights;
  if (f.sp_dist_m) cfg.sp_dist_m = *f.sp_dist_m;
  if (f.sp_min_duration_s) cfg.sp_min_duration_s = *f.sp_min_duration_s;
  if (f.sample_rate) cfg.sample_rate = *f.sample_rate;
  if (f.cell_size_m) cfg.cell_size_m = *f.cell_size_m;
  if (f.popest_mode) {
    if (*f.popest_mode == "home") cfg.popest_mode = PopestMode::kHome;
    else if (*f.popest_mode == "night_fixes")
      cfg.popest_mode = PopestMode::kNightFixes;
    else
      throw ConfigError("config: popest_mode must be 'home' or 'night_fixes'");
  }
  if (f.rsweep) cfg.rsweep_r_m = *f.rsweep;
  validate_config(cfg);
  return cfg;
}

std::string header_for(const PipelineConfig& cfg) {
  return artifact_header(config_digest(cfg));
}

void write_out(const fs::path& dir, const std::string& name,
               const std::string& contents) {
  fs::create_directories(dir);
  atomic_write_file((dir / name).string(), contents);
  std::printf("wrote %s\n", (dir / name).string().c_str());
}

std::map<std::string, EvacRecord> evac_from_file_or_compute(
    const PipelineConfig& cfg, const std::optional<std::string>& evac_path) {
  if (evac_path) {
    std::ifstream in(*evac_path, std::ios::binary);
    if (!in) throw DataError("evac: cannot open " + *evac_path);
    return parse_evac_csv(in);
  }
  auto inputs = load_inputs(cfg, false);
  const auto sps = compute_staypoints(cfg, inputs.gps);
  const auto homes = compute_homes(cfg, sps, inputs.lgus);
  return detect_all(cfg, sps, homes);
}

std::map<std::string, double> intensity_from(const PipelineConfig& cfg) {
  std::ifstream in(cfg.intensity_path, std::ios::binary);
  if (!in) throw DataError("intensity: cannot open " + cfg.intensity_path);
  return parse_intensity_csv(in);
}

int cmd_synth(const std::string& preset, const std::optional<std::string>& scenario,
              const std::optional<std::uint64_t>& seed,
              const std::string& out) {
  ScenarioConfig cfg = scenario ? parse_scenario_json(read_file(*scenario))
                                : scenario_preset(preset);
  if (seed) cfg.seed = *seed;
  const ScenarioTruth truth = generate_scenario(cfg, out);
  std::size_t evacuated = 0;
  for (const auto& [uid, ut] : truth.users)
    if (ut.evacuated) ++evacuated;
  std::printf("scenario '%s' seed=%llu: %zu users (%zu evacuated) in %zu LGUs -> %s\n",
              cfg.name.c_str(), static_cast<unsigned long long>(cfg.seed),
              truth.users.size(), evacuated, cfg.lgus.size(), out.c_str());
  return 0;
}

int cmd_homes(const CfgFlags& flags) {
  const PipelineConfig cfg = resolve_config(flags);
  auto inputs = load_inputs(cfg, false);
  const auto sps = compute_staypoints(cfg, inputs.gps);
  const auto homes = compute_homes(cfg, sps, inputs.lgus);
  if (homes.empty()) throw DataError("homes: no user passes the min_nights filter");
  write_out(cfg.out_dir, "homes.csv", homes_csv_string(homes, header_for(cfg)));
  std::printf("estimated homes for %zu of %zu users\n", homes.size(),
              inputs.gps.size());
  return 0;
}

int cmd_evac(const CfgFlags& flags, const std::optional<std::string>& homes_path) {
  const PipelineConfig cfg = resolve_config(flags);
  if (cfg.event_time_utc <= 0) throw ConfigError("config: event_time is required");
  auto inputs = load_inputs(cfg, false);
  const auto sps = compute_staypoints(cfg, inputs.gps);
  std::map<std::string, HomeEstimate> homes;
  if (homes_path) {
    std::ifstream in(*homes_path, std::ios::binary);
    if (!in) throw DataError("homes: cannot open " + *homes_path);
    homes = parse_homes_csv(in);
  } else {
    homes = compute_homes(cfg, sps, inputs.lgus);
  }
  const auto evac = detect_all(cfg, sps, homes);
  if (evac.empty())
    throw DataError("evacuation: no user observed in the post-event window");
  write_out(cfg.out_dir, "evac.csv", evac_csv_string(evac, header_for(cfg)));
  std::size_t evacuated = 0;
  for (const auto& [uid, rec] : evac)
    if (rec.evacuated) ++evacuated;
  std::printf("determined %zu users, %zu evacuated (r=%.0f m, window=%d nights)\n",
              evac.size(), evacuated, cfg.r_m, cfg.window_days);
  return 0;
}

int cmd_rates(const CfgFlags& flags, const std::optional<std::string>& evac_path) {
  const PipelineConfig cfg = resolve_config(flags);
  const auto evac = evac_from_file_or_compute(cfg, evac_path);
  const auto rates = aggregate_rates(evac, intensity_from(cfg));
  write_out(cfg.out_dir, "rates.csv", rates_csv_string(rates, header_for(cfg)));
  std::printf("%zu LGU rate rows\n", rates.size());
  return 0;
}

int cmd_fit(const CfgFlags& flags, const std::string& rates_path, bool pooled) {
  const PipelineConfig cfg = resolve_config(flags);
  std::ifstream in(rates_path, std::ios::binary);
  if (!in) throw DataError("rates: cannot open " + rates_path);
  const auto rates = parse_rates_csv(in);

  std::vector<Observation> obs;
  if (pooled) {
    for (const auto& p : pool_by_intensity(rates))
      obs.push_back(Observation{p.si, p.M, p.M_star});
  } else {
    for (const auto& r : rates) obs.push_back(Observation{r.si, r.M, r.M_star});
  }
  const FitResult fit = fit_mle(obs, cfg.fit);

  const auto pooled_rates = pool_by_intensity(rates);
  std::vector<double> o, p;
  for (const auto& pr : pooled_rates) {
    o.push_back(pr.rate);
    p.push_back(frag_eval(pr.si, fit.params));
  }
  FragilityReport rep;
  rep.params = fit.params;
  rep.log_likelihood = fit.log_likelihood;
  rep.R = pearson_r(o, p);
  rep.mape_pct = mape(o, p).mape_pct;
  rep.n_obs = fit.n_obs;
  rep.r_m = cfg.r_m;
  rep.window_days = cfg.window_days;
  write_out(cfg.out_dir, "fragility.json", fragility_json_string(rep));
  write_out(cfg.out_dir, "curve.csv", curve_csv_string(fit.params, header_for(cfg)));
  std::printf("mu=%.4f sigma=%.4f a=%.4f  R=%.4f MAPE=%.2f%%  (n=%zu, LL=%.2f)\n",
              fit.params.mu, fit.params.sigma, fit.params.a, rep.R,
              rep.mape_pct, fit.n_obs, fit.log_likelihood);
  return 0;
}

int cmd_loo(const CfgFlags& flags, const std::vector<std::string>& rate_specs) {
  const PipelineConfig cfg = resolve_config(flags);
  std::vector<Disaster> disasters;
  for (const auto& spec : rate_specs) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == spec.size())
      throw ConfigError("loo: --rates expects name=path, got " + spec);
    Disaster d;
    d.name = spec.substr(0, eq);
    const std::string path = spec.substr(eq + 1);
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("rates: cannot open " + path);
    d.rows = parse_rates_csv(in);
    disasters.push_back(std::move(d));
  }
  const auto rows = loo_validate(disasters, cfg.fit);
  write_out(cfg.out_dir, "loo.csv", loo_csv_string(rows, header_for(cfg)));
  for (const auto& r : rows)
    std::printf("left_out=%s R=%.4f MAPE=%.2f%% mu=%.4f sigma=%.4f a=%.4f\n",
                r.left_out.c_str(), r.R, r.mape_pct, r.params.mu,
                r.params.sigma, r.params.a);
  return 0;
}

int cmd_predict(const CfgFlags& flags, const std::string& fragility_path,
                const std::optional<std::string>& population_path,
                const std::optional<std::string>& rates_path) {
  const PipelineConfig cfg = resolve_config(flags);
  const FragilityReport rep = parse_fragility_json(read_file(fragility_path));

  std::map<std::string, double> population;
  if (population_path) {
    std::ifstream in(*population_path, std::ios::binary);
    if (!in) throw DataError("population: cannot open " + *population_path);
    population = parse_population_csv(in);
  } else if (rates_path) {
    std::ifstream in(*rates_path, std::ios::binary);
    if (!in) throw DataError("rates: cannot open " + *rates_path);
    for (const auto& r : parse_rates_csv(in))
      population[r.lgu_id] =
          static_cast<double>(r.M) / cfg.sample_rate;
  } else {
    throw ConfigError("predict: provide --population or --rates");
  }

  const auto report =
      predict_evacuees(population, intensity_from(cfg), rep.params);
  write_out(cfg.out_dir, "predictions.csv",
            predictions_csv_string(report, header_for(cfg)));
  std::printf("expected evacuees %.1f of population %.1f across %zu LGUs",
              report.total_expected, report.total_population,
              report.rows.size());
  if (!report.missing.empty())
    std::printf(" (%zu LGUs missing population)", report.missing.size());
  std::printf("\n");
  return 0;
}

int cmd_distfit(const CfgFlags& flags, const std::optional<std::string>& evac_path) {
  const PipelineConfig cfg = resolve_config(flags);
  const auto evac = evac_from_file_or_compute(cfg, evac_path);
  const auto intensity = intensity_from(cfg);
  const auto& dc = cfg.dist_fit;

  std::map<int, std::vector<double>> by_key;
  std::vector<double> all;
  for (const auto& [uid, rec] : evac) {
    if (!rec.evacuated) continue;
    auto it = intensity.find(rec.lgu_id);
    if (it == intensity.end())
      throw DataError("intensity: no intensity for LGU " + rec.lgu_id);
    by_key[static_cast<int>(std::floor(it->second / dc.si_bin_width))]
        .push_back(rec.distance_m);
    all.push_back(rec.distance_m);
  }
  const PowerLawFit pooled = fit_power_law(all, dc.d_min_m, dc.d_max_m,
                                           dc.bins_per_decade, dc.min_samples);
  const LogBinnedPdf pooled_pdf =
      distance_pdf(all, dc.d_min_m, dc.d_max_m, dc.bins_per_decade);

  std::vector<CollapseEntry> entries;
  for (const auto& [key, samples] : by_key) {
    std::size_t in_range = 0;
    for (double d : samples)
      if (d >= dc.d_min_m && d <= dc.d_max_m) ++in_range;
    if (in_range < dc.min_samples) continue;
    CollapseEntry e;
    e.si_key = key;
    e.fit = fit_power_law(samples, dc.d_min_m, dc.d_max_m, dc.bins_per_decade,
                          dc.min_samples);
    e.pdf = distance_pdf(samples, dc.d_min_m, dc.d_max_m, dc.bins_per_decade);
    entries.push_back(std::move(e));
  }
  write_out(cfg.out_dir, "distpdf.csv",
            distpdf_csv_string(&pooled_pdf, entries, dc.si_bin_width,
                               header_for(cfg)));
  write_out(cfg.out_dir, "powerlaw.json",
            powerlaw_json_string(&pooled, entries, dc.si_bin_width));
  std::printf("pooled gamma=%.4f (r2=%.3f, n=%zu); %zu intensity bins fitted\n",
              pooled.gamma, pooled.r2_loglog, pooled.n, entries.size());
  return 0;
}

int cmd_rsweep(const CfgFlags& flags) {
  const PipelineConfig cfg = resolve_config(flags);
  const auto rows = r_sensitivity_sweep(cfg);
  write_out(cfg.out_dir, "rsweep.csv", rsweep_csv_string(rows, header_for(cfg)));
  for (const auto& r : rows)
    std::printf("r=%.0f m: M=%lld M*=%lld mu=%.4f sigma=%.4f a=%.4f\n", r.r_m,
                static_cast<long long>(r.M), static_cast<long long>(r.M_star),
                r.params.mu, r.params.sigma, r.params.a);
  return 0;
}

int cmd_popest(const CfgFlags& flags) {
  const PipelineConfig cfg = resolve_config(flags);
  auto inputs = load_inputs(cfg, false);
  const auto sps = compute_staypoints(cfg, inputs.gps);
  const auto homes = compute_homes(cfg, sps, inputs.lgus);

  GridSpec spec;
  if (inputs.census) {
    spec = inputs.census->spec;
    if (spec.cell_size_m != cfg.cell_size_m)
      throw ConfigError("config: cell_size_m does not match the census grid");
  } else {
    double lat = 0.0, lon = 0.0;
    for (const auto& l : inputs.lgus) {
      lat += l.centroid.lat;
      lon += l.centroid.lon;
    }
    spec.origin = GeoPoint{lat / inputs.lgus.size(), lon / inputs.lgus.size()};
    spec.cell_size_m = cfg.cell_size_m;
  }

  std::map<std::string, GeoPoint> locs;
  if (cfg.popest_mode == PopestMode::kHome) {
    for (const auto& [uid, h] : homes) locs[uid] = h.home;
  } else {
    for (const auto& [uid, user_sps] : sps) {
      const auto nights = nighttime_filter(user_sps, cfg.tz_offset_s);
      const NightStay* best = nullptr;
      for (const auto& ns : nights)
        if (!best || ns.weight_s > best->weight_s ||
            (ns.weight_s == best->weight_s && ns.sp.t_start < best->sp.t_start))
          best = &ns;
      if (best) locs[uid] = best->sp.center;
    }
  }
  if (locs.empty()) throw DataError("popest: no user locations");
  const auto grid = estimate_population_grid(locs, spec, cfg.sample_rate);
  write_out(cfg.out_dir, "popgrid.csv",
            popgrid_csv_string(grid, inputs.census ? &*inputs.census : nullptr,
                               header_for(cfg)));
  std::printf("estimated population %.1f over %zu cells", grid.total(),
              grid.values.size());
  if (inputs.census)
    std::printf(", census correlation %.4f",
                census_correlation(grid, *inputs.census));
  std::printf("\n");
  return 0;
}

int cmd_report(const std::string& dir) {
  const fs::path out_dir(dir);
  const auto manifest_path = out_dir / "manifest.json";
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(read_file(manifest_path.string()));
  } catch (const nlohmann::json::exception& e) {
    throw DataError("manifest.json: " + std::string(e.what()));
  }
  const FragilityReport frag =
      parse_fragility_json(read_file((out_dir / "fragility.json").string()));

  std::ifstream rin((out_dir / "rates.csv").string(), std::ios::binary);
  if (!rin) throw DataError("rates: cannot open " + (out_dir / "rates.csv").string());
  const auto rates = parse_rates_csv(rin);
  const auto pooled = pool_by_intensity(rates);

  const std::string header =
      artifact_header(manifest.value("config_digest", std::string("0")));
  std::string fig3 = header;
  fig3 += "si,observed_rate,predicted_rate,M,M_star\n";
  for (const auto& p : pooled) {
    fig3 += fmt_fixed(p.si, 1);
    fig3 += ',';
    fig3 += fmt_general(p.rate);
    fig3 += ',';
    fig3 += fmt_general(frag_eval(p.si, frag.params));
    fig3 += ',';
    fig3 += std::to_string(p.M);
    fig3 += ',';
    fig3 += std::to_string(p.M_star);
    fig3 += '\n';
  }
  atomic_write_file((out_dir / "fig3.csv").string(), fig3);

  std::string md = "# evaq run report\n\n";
  md += "- config digest: " + manifest.value("config_digest", std::string("?")) + "\n";
  const auto& counts = manifest["counts"];
  md += "- users: " + counts["users"].dump() + ", homes: " + counts["homes"].dump() +
        ", determined: " + counts["determined"].dump() + ", evacuated: " +
        counts["evacuated"].dump() + "\n";
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "- fragility: mu=%.4f sigma=%.4f a=%.4f (R=%.4f, MAPE=%.2f%%)\n",
                frag.params.mu, frag.params.sigma, frag.params.a, frag.R,
                frag.mape_pct);
  md += buf;
  if (manifest["results"].contains("census_correlation")) {
    std::snprintf(buf, sizeof buf, "- census correlation: %.4f\n",
                  manifest["results"]["census_correlation"].get<double>());
    md += buf;
  }
  if (manifest["results"].contains("collapse_gamma_spread")) {
    std::snprintf(buf, sizeof buf,
                  "- distance collapse: gamma spread %.4f, max pairwise L1 %.4f\n",
                  manifest["results"]["collapse_gamma_spread"].get<double>(),
                  manifest["results"]["collapse_max_l1"].get<double>());
    md += buf;
  }
  md += "\nPlot-ready files: fig3.csv (rates vs fitted curve), curve.csv "
        "(fragility curve), distpdf.csv (distance PDFs), timing.csv "
        "(evacuation timing histogram).\n";
  atomic_write_file((out_dir / "report.md").string(), md);
  std::printf("%s", md.c_str());
  std::printf("wrote %s and %s\n", (out_dir / "fig3.csv").string().c_str(),
              (out_dir / "report.md").string().c_str());
  return 0;
}

int cmd_run(const CfgFlags& flags) {
  const PipelineConfig cfg = resolve_config(flags);
  const PipelineSummary sum = run_pipeline(cfg);
  std::printf("users=%zu homes=%zu determined=%zu evacuated=%zu\n", sum.n_users,
              sum.n_homes, sum.n_determined, sum.n_evacuated);
  std::printf("mu=%.4f sigma=%.4f a=%.4f  R=%.4f MAPE=%.2f%%\n",
              sum.fit.params.mu, sum.fit.params.sigma, sum.fit.params.a, sum.R,
              sum.mape_pct);
  if (sum.collapse_done)
    std::printf("collapse: gamma spread %.4f, max pairwise L1 %.4f\n",
                sum.collapse_gamma_spread, sum.collapse_max_l1);
  if (sum.census_correlation)
    std::printf("census correlation %.4f\n", *sum.census_correlation);
  std::printf("artifacts in %s\n", sum.out_dir.c_str());
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"evaq: evacuation behavior reconstruction from GPS trajectories"};
  app.set_version_flag("--version", evaq::kVersion);
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic scenario");
  std::string preset = "small";
  std::optional<std::string> scenario_path;
  std::optional<std::uint64_t> synth_seed;
  std::string synth_out = "data";
  synth->add_option("--preset", preset, "built-in scenario: small or paper");
  synth->add_option("--scenario", scenario_path, "scenario JSON file");
  synth->add_option("--seed", synth_seed, "seed override");
  synth->add_option("--out", synth_out, "output directory");

  CfgFlags homes_f, evac_f, rates_f, fit_f, loo_f, predict_f, distfit_f,
      rsweep_f, popest_f, run_f;

  auto* homes = app.add_subcommand("homes", "estimate home locations");
  add_common_flags(homes, homes_f);

  auto* evac = app.add_subcommand("evac", "detect evacuations");
  add_common_flags(evac, evac_f);
  std::optional<std::string> evac_homes_path;
  evac->add_option("--homes", evac_homes_path, "reuse a homes.csv");

  auto* rates = app.add_subcommand("rates", "aggregate per-LGU rates");
  add_common_flags(rates, rates_f);
  std::optional<std::string> rates_evac_path;
  rates->add_option("--evac", rates_evac_path, "reuse an evac.csv");

  auto* fit = app.add_subcommand("fit", "fit the fragility curve");
  add_common_flags(fit, fit_f);
  std::string fit_rates_path;
  bool fit_pooled = false;
  fit->add_option("--rates", fit_rates_path, "rates.csv input")->required();
  fit->add_flag("--pooled", fit_pooled, "fit pooled per-intensity observations");

  auto* loo = app.add_subcommand("loo", "leave-one-disaster-out validation");
  add_common_flags(loo, loo_f);
  std::vector<std::string> loo_rates;
  loo->add_option("--rates", loo_rates, "name=path rates.csv, repeatable")
      ->required()
      ->expected(-2);

  auto* predict = app.add_subcommand("predict", "predict evacuee counts");
  add_common_flags(predict, predict_f);
  std::string predict_frag;
  std::optional<std::string> predict_pop, predict_rates;
  predict->add_option("--fragility", predict_frag, "fragility.json")->required();
  predict->add_option("--population", predict_pop, "population.csv (lgu_id,population)");
  predict->add_option("--rates", predict_rates,
                      "derive population from rates.csv M / sample_rate");

  auto* distfit = app.add_subcommand("distfit", "fit evacuation-distance power laws");
  add_common_flags(distfit, distfit_f);
  std::optional<std::string> distfit_evac_path;
  distfit->add_option("--evac", distfit_evac_path, "reuse an evac.csv");

  auto* rsweep = app.add_subcommand("rsweep", "r-sensitivity sweep");
  add_common_flags(rsweep, rsweep_f);

  auto* popest = app.add_subcommand("popest", "estimate population grid");
  add_common_flags(popest, popest_f);

  auto* report = app.add_subcommand("report", "summarize a run directory");
  std::string report_dir = "out";
  report->add_option("--out-dir", report_dir, "pipeline output directory");

  auto* run = app.add_subcommand("run", "run the full pipeline");
  add_common_flags(run, run_f);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (synth->parsed())
      return cmd_synth(preset, scenario_path, synth_seed, synth_out);
    if (homes->parsed()) return cmd_homes(homes_f);
    if (evac->parsed()) return cmd_evac(evac_f, evac_homes_path);
    if (rates->parsed()) return cmd_rates(rates_f, rates_evac_path);
    if (fit->parsed()) return cmd_fit(fit_f, fit_rates_path, fit_pooled);
    if (loo->parsed()) return cmd_loo(loo_f, loo_rates);
    if (predict->parsed())
      return cmd_predict(predict_f, predict_frag, predict_pop, predict_rates);
    if (distfit->parsed()) return cmd_distfit(distfit_f, distfit_evac_path);
    if (rsweep->parsed()) return cmd_rsweep(rsweep_f);
    if (popest->parsed()) return cmd_popest(popest_f);
    if (report->parsed()) return cmd_report(report_dir);
    if (run->parsed()) return cmd_run(run_f);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error (%s): %s\n", evaq::error_kind(e), e.what());
    return evaq::exit_code_for(e);
  }
  return 0;
}
