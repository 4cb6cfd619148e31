#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "evaq/config.hpp"
#include "evaq/evac.hpp"
#include "evaq/geo.hpp"
#include "evaq/homeloc.hpp"
#include "evaq/popest.hpp"
#include "evaq/trajectory.hpp"

namespace evaq {

struct PipelineInputs {
  std::map<std::string, Trajectory> gps;
  GpsParseStats gps_stats;
  std::vector<LguRecord> lgus;
  std::map<std::string, double> intensity;
  std::optional<PopulationGrid> census;
  std::map<std::string, std::string> input_digests; // label -> fnv1a64 hex
};

// Stage helpers shared by the subcommands. Each validates what it needs and
// throws the taxonomy errors from errors.hpp.
PipelineInputs load_inputs(const PipelineConfig& cfg, bool need_census);
std::map<std::string, std::vector<Staypoint>> compute_staypoints(
    const PipelineConfig& cfg, const std::map<std::string, Trajectory>& gps);
std::map<std::string, HomeEstimate> compute_homes(
    const PipelineConfig& cfg,
    const std::map<std::string, std::vector<Staypoint>>& sps,
    const std::vector<LguRecord>& lgus);
std::map<std::string, EvacRecord> detect_all(
    const PipelineConfig& cfg,
    const std::map<std::string, std::vector<Staypoint>>& sps,
    const std::map<std::string, HomeEstimate>& homes);

struct PipelineSummary {
  std::size_t n_users = 0;
  std::size_t n_homes = 0;
  std::size_t n_determined = 0;
  std::size_t n_evacuated = 0;
  FitResult fit;
  double R = 0.0;
  double mape_pct = 0.0;
  bool distance_fit_done = false;
  double collapse_gamma_spread = 0.0; // when >= 2 intensity bins were fittable
  double collapse_max_l1 = 0.0;
  bool collapse_done = false;
  std::optional<double> census_correlation;
  std::string out_dir;
};

// ingest -> staypoints -> homes -> evacuation -> rates -> fragility fit ->
// distance fit -> popest -> manifest. Artifacts are written atomically; a
// failing stage writes error.json and rethrows with the stage name.
PipelineSummary run_pipeline(const PipelineConfig& cfg);

struct RsweepRow {
  double r_m = 0.0;
  std::int64_t M = 0;
  std::int64_t M_star = 0;
  FragilityParams params;
  double R = 0.0;
  double mape_pct = 0.0;
};

// Re-runs evacuation -> rates -> fit for each radius in cfg.rsweep_r_m,
// reusing one staypoint/home computation.
std::vector<RsweepRow> r_sensitivity_sweep(const PipelineConfig& cfg);

std::string rsweep_csv_string(const std::vector<RsweepRow>& rows,
                              const std::string& header_comment);

// population.csv: lgu_id,population
std::map<std::string, double> parse_population_csv(std::istream& in);

} // namespace evaq
