#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"

#include "evaq/config.hpp"
#include "evaq/csvio.hpp"
#include "evaq/errors.hpp"
#include "evaq/pipeline.hpp"
#include "evaq/synth.hpp"

using namespace evaq;
namespace fs = std::filesystem;

namespace {

const char* kArtifacts[] = {"config_used.json", "homes.csv",  "evac.csv",
                            "timing.csv",       "rates.csv",  "fragility.json",
                            "curve.csv",        "distpdf.csv", "powerlaw.json",
                            "popgrid.csv",      "manifest.json"};

struct Fixture {
  fs::path dir;
  PipelineConfig cfg;
};

// One shared synthetic data set per binary run; regenerating it for every
// test case would dominate the suite's runtime.
const Fixture& fixture() {
  static const Fixture fx = [] {
    Fixture f;
    f.dir = fs::temp_directory_path() / "evaq_pipeline_tests";
    fs::remove_all(f.dir);
    fs::create_directories(f.dir);

    ScenarioConfig sc;
    sc.name = "pl";
    sc.seed = 2024;
    sc.days_before = 6;
    sc.days_after = 6;
    sc.lgus = {
        {"p-01", "alpha", GeoPoint{32.80, 130.70}, 2000.0, 6.5, 60},
        {"p-02", "beta", GeoPoint{32.95, 130.85}, 2000.0, 5.2, 60},
        {"p-03", "gamma", GeoPoint{33.10, 130.60}, 2000.0, 6.0, 60},
    };
    generate_scenario(sc, f.dir);

    f.cfg.gps_path = (f.dir / "gps.csv").string();
    f.cfg.lgu_path = (f.dir / "lgu.csv").string();
    f.cfg.intensity_path = (f.dir / "intensity.csv").string();
    f.cfg.census_path = (f.dir / "census.csv").string();
    f.cfg.out_dir = (f.dir / "out").string();
    f.cfg.event_time_utc = sc.event_time_utc;
    f.cfg.dist_fit.min_samples = 10;
    return f;
  }();
  return fx;
}

std::map<std::string, std::string> snapshot(const fs::path& out) {
  std::map<std::string, std::string> bytes;
  for (const char* name : kArtifacts)
    if (fs::exists(out / name)) bytes[name] = read_file((out / name).string());
  return bytes;
}

} // namespace

TEST_CASE("run_pipeline produces a consistent artifact set") {
  const Fixture& fx = fixture();
  const PipelineSummary sum = run_pipeline(fx.cfg);
  const fs::path out(fx.cfg.out_dir);

  CHECK(sum.n_users == 180);
  CHECK(sum.n_homes <= sum.n_users);
  CHECK(sum.n_homes > 150); // dense fixture: nearly everyone gets a home
  CHECK(sum.n_determined <= sum.n_homes);
  CHECK(sum.n_evacuated <= sum.n_determined);
  CHECK(sum.n_evacuated > 0);
  CHECK(sum.fit.converged);
  CHECK(sum.fit.params.sigma > 0.0);
  CHECK(sum.fit.params.a > 0.0);
  CHECK(sum.fit.params.a <= 1.0);
  CHECK(sum.R > 0.5);
  REQUIRE(sum.census_correlation.has_value());
  CHECK(*sum.census_correlation > 0.8);

  for (const char* name : kArtifacts) CHECK(fs::exists(out / name));
  CHECK(!fs::exists(out / "error.json"));

  // Manifest digests match the files on disk.
  const auto manifest = nlohmann::json::parse(read_file((out / "manifest.json").string()));
  CHECK(manifest.at("tool") == "evaq");
  CHECK(manifest.at("counts").at("users") == 180);
  for (const auto& [name, dg] : manifest.at("artifacts").items())
    CHECK(dg.get<std::string>() ==
          hex64(fnv1a64_file((out / name).string())));

  // fragility.json round-trips through the library parser.
  const FragilityReport rep =
      parse_fragility_json(read_file((out / "fragility.json").string()));
  CHECK(rep.params.mu == sum.fit.params.mu);
  CHECK(rep.r_m == fx.cfg.r_m);
}

TEST_CASE("run_pipeline is byte-identical on rerun") {
  const Fixture& fx = fixture();
  run_pipeline(fx.cfg);
  const auto first = snapshot(fx.cfg.out_dir);
  REQUIRE(first.size() == std::size(kArtifacts));
  run_pipeline(fx.cfg);
  const auto second = snapshot(fx.cfg.out_dir);
  REQUIRE(second.size() == first.size());
  for (const auto& [name, bytes] : first) CHECK(second.at(name) == bytes);
}

TEST_CASE("pipeline failures carry the stage and write error.json") {
  const Fixture& fx = fixture();

  PipelineConfig cfg = fx.cfg;
  cfg.out_dir = (fx.dir / "out_err").string();
  cfg.event_time_utc = 0;
  CHECK_THROWS_WITH_AS(run_pipeline(cfg), doctest::Contains("stage ingest"),
                       ConfigError);
  auto err = nlohmann::json::parse(
      read_file((fs::path(cfg.out_dir) / "error.json").string()));
  CHECK(err.at("stage") == "ingest");
  CHECK(err.at("kind") == "config");

  cfg = fx.cfg;
  cfg.out_dir = (fx.dir / "out_err").string();
  cfg.event_time_utc = 4102444800; // far outside the observation span
  CHECK_THROWS_WITH_AS(run_pipeline(cfg),
                       doctest::Contains("outside the GPS observation span"),
                       ConfigError);

  cfg = fx.cfg;
  cfg.out_dir = (fx.dir / "out_err").string();
  cfg.gps_path = (fx.dir / "missing.csv").string();
  CHECK_THROWS_WITH_AS(run_pipeline(cfg), doctest::Contains("stage ingest"),
                       DataError);
  err = nlohmann::json::parse(
      read_file((fs::path(cfg.out_dir) / "error.json").string()));
  CHECK(err.at("kind") == "data");

  // A subsequent success clears the marker.
  cfg = fx.cfg;
  cfg.out_dir = (fx.dir / "out_err").string();
  run_pipeline(cfg);
  CHECK(!fs::exists(fs::path(cfg.out_dir) / "error.json"));
}

TEST_CASE("r sweep reuses the cohort and reacts monotonically") {
  const Fixture& fx = fixture();
  PipelineConfig cfg = fx.cfg;
  cfg.rsweep_r_m = {100.0, 200.0, 400.0};
  const auto rows = r_sensitivity_sweep(cfg);
  REQUIRE(rows.size() == 3);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].r_m == cfg.rsweep_r_m[i]);
    CHECK(rows[i].M == rows[0].M); // same determined cohort at every radius
    CHECK(rows[i].M_star <= rows[i].M);
    CHECK(rows[i].params.sigma > 0.0);
  }
  CHECK(rows[1].M_star <= rows[0].M_star);
  CHECK(rows[2].M_star <= rows[1].M_star);

  const std::string csv = rsweep_csv_string(rows, "# h\n");
  CHECK(csv.find("r_m,M,M_star,mu,sigma,a,R,MAPE\n") != std::string::npos);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
}

TEST_CASE("population csv parser enforces its contract") {
  std::istringstream good("lgu_id,population\nA,1200\nB,3400.5\n");
  const auto pop = parse_population_csv(good);
  REQUIRE(pop.size() == 2);
  CHECK(pop.at("A") == 1200.0);
  CHECK(pop.at("B") == 3400.5);

  std::istringstream bad_header("id,pop\nA,1\n");
  CHECK_THROWS_AS(parse_population_csv(bad_header), DataError);
  std::istringstream dup("lgu_id,population\nA,1\nA,2\n");
  CHECK_THROWS_AS(parse_population_csv(dup), DataError);
  std::istringstream neg("lgu_id,population\nA,-4\n");
  CHECK_THROWS_AS(parse_population_csv(neg), DataError);
  std::istringstream empty("");
  CHECK_THROWS_AS(parse_population_csv(empty), DataError);
}
