#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

#include "doctest.h"

#include "evaq/csvio.hpp"
#include "evaq/errors.hpp"
#include "evaq/fragility.hpp"
#include "evaq/popest.hpp"
#include "evaq/rng.hpp"
#include "evaq/synth.hpp"
#include "evaq/timeutil.hpp"
#include "evaq/trajectory.hpp"
#include "support/oracles.hpp"

using namespace evaq;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "evaq_synth_tests" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

ScenarioConfig tiny_scenario() {
  ScenarioConfig cfg;
  cfg.name = "tiny";
  cfg.seed = 404;
  cfg.days_before = 6;
  cfg.days_after = 6;
  cfg.lgus = {
      {"t-01", "alpha", GeoPoint{32.80, 130.70}, 2000.0, 6.5, 40},
      {"t-02", "beta", GeoPoint{32.95, 130.85}, 2000.0, 5.2, 40},
      {"t-03", "gamma", GeoPoint{33.10, 130.60}, 2000.0, 6.0, 40},
  };
  return cfg;
}

} // namespace

TEST_CASE("presets are valid and distinct") {
  const ScenarioConfig small = scenario_preset("small");
  CHECK(!small.lgus.empty());
  const ScenarioConfig paper = scenario_preset("paper");
  CHECK(paper.lgus.size() > small.lgus.size());
  std::size_t paper_users = 0;
  for (const auto& l : paper.lgus) paper_users += l.n_users;
  CHECK(paper_users > 100000);
  for (const auto& l : paper.lgus) {
    CHECK(l.si >= 1.0);
    CHECK(l.si <= 7.0);
  }
  CHECK_THROWS_AS(scenario_preset("nope"), ConfigError);
}

TEST_CASE("scenario json round-trip") {
  ScenarioConfig cfg = tiny_scenario();
  cfg.grid_origin_set = true;
  cfg.grid_origin = GeoPoint{32.9, 130.7};
  const std::string text = scenario_json_string(cfg);
  const ScenarioConfig back = parse_scenario_json(text);
  CHECK(back.name == cfg.name);
  CHECK(back.seed == cfg.seed);
  CHECK(back.event_time_utc == cfg.event_time_utc);
  CHECK(back.truth.mu == cfg.truth.mu);
  CHECK(back.gamma_truth == cfg.gamma_truth);
  REQUIRE(back.lgus.size() == 3);
  CHECK(back.lgus[1].si == 5.2);
  CHECK(back.lgus[1].n_users == 40);
  CHECK(back.grid_origin_set);
  CHECK(back.grid_origin.lat == doctest::Approx(32.9));

  CHECK_THROWS_AS(parse_scenario_json("{"), ConfigError);
  CHECK_THROWS_AS(parse_scenario_json("{\"bogus\": 1}"), ConfigError);

  ScenarioConfig bad = tiny_scenario();
  bad.lgus[0].si = 8.5; // outside [1, 7]
  CHECK_THROWS_AS(parse_scenario_json(scenario_json_string(bad)), ConfigError);
}

TEST_CASE("generate_scenario writes a consistent artifact set") {
  const fs::path dir = fresh_dir("gen");
  const ScenarioConfig cfg = tiny_scenario();
  const ScenarioTruth truth = generate_scenario(cfg, dir);

  CHECK(truth.users.size() == 120);
  CHECK(truth.d0_local_day ==
        first_night_on_or_after(cfg.event_time_utc, cfg.tz_offset_s));

  for (const char* name : {"gps.csv", "lgu.csv", "intensity.csv",
                           "ground_truth.csv", "census.csv",
                           "scenario_used.json"})
    CHECK(fs::exists(dir / name));

  // Ground truth round-trips and matches the in-memory truth.
  std::ifstream gt(dir / "ground_truth.csv");
  const auto parsed = parse_ground_truth_csv(gt);
  REQUIRE(parsed.size() == truth.users.size());
  std::size_t evacuated = 0;
  for (const auto& [uid, ut] : truth.users) {
    REQUIRE(parsed.count(uid) == 1);
    const UserTruth& p = parsed.at(uid);
    CHECK(p.evacuated == ut.evacuated);
    CHECK(haversine_m(p.home, ut.home) < 0.02); // 7-decimal quantization
    if (ut.evacuated) {
      ++evacuated;
      CHECK(p.evac_night == ut.evac_night);
      CHECK(haversine_m(p.dest, ut.dest) < 0.1);
      // Destination distance honors the configured range (with a small
      // allowance for the 7-decimal coordinate quantization).
      const double d = haversine_m(ut.home, ut.dest);
      CHECK(d > cfg.dest_min_m * 0.99);
      CHECK(d < cfg.dest_max_m * 1.01);
      CHECK(ut.evac_night >= truth.d0_local_day);
      CHECK(ut.evac_night <= truth.d0_local_day + cfg.delay.cap);
    }
  }
  CHECK(evacuated > 0);
  CHECK(evacuated < truth.users.size());

  // Homes stay inside their LGU disc.
  for (const auto& [uid, ut] : truth.users) {
    bool ok = false;
    for (const auto& l : cfg.lgus)
      if (l.lgu_id == ut.lgu_id && haversine_m(l.centroid, ut.home) <= l.radius_m * 1.001)
        ok = true;
    CHECK(ok);
  }

  // GPS rows parse and every timestamp lies inside the observation span.
  std::ifstream gin(dir / "gps.csv");
  GpsParseStats stats;
  const auto trajs = parse_gps_csv(gin, &stats);
  CHECK(stats.skipped_rows == 0);
  CHECK(trajs.size() == truth.users.size());

  const std::int64_t event_day = local_day_of(cfg.event_time_utc, cfg.tz_offset_s);
  const std::int64_t lo =
      (event_day - cfg.days_before) * kSecondsPerDay + 8 * 3600 - cfg.tz_offset_s;
  const std::int64_t hi =
      (event_day + cfg.days_after + 1) * kSecondsPerDay + 6 * 3600 - cfg.tz_offset_s;
  for (const auto& [uid, traj] : trajs) {
    for (const auto& r : traj.records) {
      CHECK(r.t >= lo);
      CHECK(r.t < hi);
    }
    for (std::size_t i = 1; i < traj.records.size(); ++i)
      CHECK(traj.records[i].t >= traj.records[i - 1].t);
  }

  // Evacuation shares per LGU follow the truth curve within binomial noise.
  std::map<std::string, std::pair<int, int>> by_lgu;
  for (const auto& [uid, ut] : truth.users) {
    auto& [m, ms] = by_lgu[ut.lgu_id];
    ++m;
    if (ut.evacuated) ++ms;
  }
  for (const auto& l : cfg.lgus) {
    const auto& [m, ms] = by_lgu.at(l.lgu_id);
    const double p = frag_eval(l.si, cfg.truth);
    const double sd = std::sqrt(p * (1.0 - p) / m);
    CHECK(static_cast<double>(ms) / m == doctest::Approx(p).scale(1.0).epsilon(4.5 * sd + 1e-9));
  }

  // census.csv totals: per-cell user counts scaled by 1/sample_rate.
  std::ifstream cin(dir / "census.csv");
  const PopulationGrid census = parse_census_csv(cin);
  double cells_total = 0.0;
  for (const auto& [c, v] : census.values) cells_total += v;
  CHECK(cells_total == doctest::Approx(120.0 / cfg.sample_rate).epsilon(1e-12));
}

TEST_CASE("generate_scenario is byte-identical across directories") {
  const ScenarioConfig cfg = tiny_scenario();
  const fs::path d1 = fresh_dir("det1");
  const fs::path d2 = fresh_dir("det2");
  generate_scenario(cfg, d1);
  generate_scenario(cfg, d2);
  for (const char* name : {"gps.csv", "lgu.csv", "intensity.csv",
                           "ground_truth.csv", "census.csv",
                           "scenario_used.json"}) {
    CHECK(read_file((d1 / name).string()) == read_file((d2 / name).string()));
  }

  ScenarioConfig other = cfg;
  other.seed = 405;
  const fs::path d3 = fresh_dir("det3");
  generate_scenario(other, d3);
  CHECK(read_file((d1 / "gps.csv").string()) !=
        read_file((d3 / "gps.csv").string()));
}

TEST_CASE("appending users does not perturb existing substreams") {
  const ScenarioConfig base = tiny_scenario();
  ScenarioConfig more = base;
  more.lgus.back().n_users += 25;

  const fs::path d1 = fresh_dir("sub1");
  const fs::path d2 = fresh_dir("sub2");
  const ScenarioTruth t1 = generate_scenario(base, d1);
  const ScenarioTruth t2 = generate_scenario(more, d2);

  CHECK(t2.users.size() == t1.users.size() + 25);
  for (const auto& [uid, ut] : t1.users) {
    REQUIRE(t2.users.count(uid) == 1);
    const UserTruth& o = t2.users.at(uid);
    CHECK(o.home == ut.home);
    CHECK(o.evacuated == ut.evacuated);
  }
  // The original users' gps rows are a subset, byte for byte.
  std::ifstream g1(d1 / "gps.csv");
  std::ifstream g2(d2 / "gps.csv");
  const auto tr1 = parse_gps_csv(g1);
  const auto tr2 = parse_gps_csv(g2);
  for (const auto& [uid, traj] : tr1) {
    REQUIRE(tr2.count(uid) == 1);
    const auto& other = tr2.at(uid);
    REQUIRE(other.records.size() == traj.records.size());
    for (std::size_t i = 0; i < traj.records.size(); ++i) {
      CHECK(other.records[i].t == traj.records[i].t);
      CHECK(other.records[i].pos == traj.records[i].pos);
    }
  }
}

TEST_CASE("scenario validation rejects bad configurations") {
  ScenarioConfig cfg = tiny_scenario();
  cfg.lgus.clear();
  CHECK_THROWS_AS(generate_scenario(cfg, fresh_dir("bad1")), ConfigError);

  cfg = tiny_scenario();
  cfg.lgus[1].lgu_id = cfg.lgus[0].lgu_id;
  CHECK_THROWS_AS(generate_scenario(cfg, fresh_dir("bad2")), ConfigError);

  cfg = tiny_scenario();
  cfg.sample_rate = 0.0;
  CHECK_THROWS_AS(generate_scenario(cfg, fresh_dir("bad3")), ConfigError);

  cfg = tiny_scenario();
  cfg.dest_min_m = 2e6; // above dest_max_m
  CHECK_THROWS_AS(generate_scenario(cfg, fresh_dir("bad4")), ConfigError);

  cfg = tiny_scenario();
  cfg.days_before = 0;
  CHECK_THROWS_AS(generate_scenario(cfg, fresh_dir("bad5")), ConfigError);
}

TEST_CASE("truncated pareto sampler matches the analytic CDF") {
  Rng rng(515);
  const double gamma = 1.25, lo = 500.0, hi = 1e6;
  const int n = 40000;
  std::vector<double> samples;
  samples.reserve(n);
  for (int i = 0; i < n; ++i) {
    const double d = rng.truncated_pareto(gamma, lo, hi);
    CHECK(d >= lo);
    CHECK(d <= hi);
    samples.push_back(d);
  }
  // Kolmogorov-Smirnov style check at 40 probe points.
  std::sort(samples.begin(), samples.end());
  double max_gap = 0.0;
  for (int k = 1; k < 40; ++k) {
    const double q = lo * std::pow(hi / lo, k / 40.0);
    const double emp =
        static_cast<double>(std::lower_bound(samples.begin(), samples.end(), q) -
                            samples.begin()) /
        n;
    max_gap = std::max(max_gap,
                       std::abs(emp - oracle::trunc_pareto_cdf(q, gamma, lo, hi)));
  }
  CHECK(max_gap < 0.015);
}

TEST_CASE("rng samplers have the right first moments") {
  Rng rng(77);
  double acc = 0.0;
  for (int i = 0; i < 20000; ++i) acc += rng.uniform();
  CHECK(acc / 20000 == doctest::Approx(0.5).epsilon(0.02));

  std::int64_t pois = 0;
  for (int i = 0; i < 2000; ++i) pois += rng.poisson(40.0);
  CHECK(static_cast<double>(pois) / 2000 == doctest::Approx(40.0).epsilon(0.02));

  std::int64_t geo_in_range = 0;
  for (int i = 0; i < 2000; ++i) {
    const std::int64_t g = rng.geometric_clamped(1.5, 3);
    CHECK(g >= 0);
    CHECK(g <= 3);
    geo_in_range += g;
  }
  CHECK(geo_in_range > 0);

  double norm = 0.0, norm2 = 0.0;
  for (int i = 0; i < 20000; ++i) {
    const double v = rng.normal(0.0, 2.0);
    norm += v;
    norm2 += v * v;
  }
  CHECK(norm / 20000 == doctest::Approx(0.0).scale(1.0).epsilon(0.06));
  CHECK(norm2 / 20000 == doctest::Approx(4.0).epsilon(0.05));

  // substream decorrelation: distinct seeds give distinct streams.
  Rng a(substream_seed(1, 0));
  Rng b(substream_seed(1, 1));
  int same = 0;
  for (int i = 0; i < 64; ++i) same += a.raw() == b.raw() ? 1 : 0;
  CHECK(same == 0);
}
