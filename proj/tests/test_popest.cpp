#include <cmath>
#include <sstream>

#include "doctest.h"

#include "evaq/errors.hpp"
#include "evaq/geo.hpp"
#include "evaq/popest.hpp"
#include "evaq/rng.hpp"

using namespace evaq;

namespace {

GridSpec spec_at(double lat, double lon, double cell) {
  GridSpec s;
  s.origin = GeoPoint{lat, lon};
  s.cell_size_m = cell;
  return s;
}

} // namespace

TEST_CASE("estimate_population_grid scales users by the sample rate") {
  const GridSpec spec = spec_at(35.0, 135.0, 1000.0);
  Rng rng(61);
  std::map<std::string, GeoPoint> locs;
  for (int i = 0; i < 250; ++i) {
    locs["u" + std::to_string(i)] = destination_point(
        spec.origin, rng.uniform(0.0, 2.0 * kPi), rng.uniform(0.0, 8000.0));
  }

  const PopulationGrid grid = estimate_population_grid(locs, spec, 0.01);
  CHECK(grid.total() == doctest::Approx(250.0 / 0.01).epsilon(1e-12));
  CHECK(!grid.values.empty());

  // Every user's cell received mass; per-cell masses are whole user counts
  // divided by the sample rate.
  for (const auto& [cell, v] : grid.values) {
    CHECK(v > 0.0);
    const double users = v * 0.01;
    CHECK(std::abs(users - std::round(users)) < 1e-9);
    CHECK(cell.cell_size_m == 1000.0);
  }

  // Each user falls in exactly the cell grid_index assigns.
  const auto& [uid0, p0] = *locs.begin();
  const GridCell c0 = grid_index(p0, spec.cell_size_m, spec.origin);
  CHECK(grid.values.count(c0) == 1);

  CHECK_THROWS_AS(estimate_population_grid(locs, spec, 0.0), ConfigError);
  CHECK_THROWS_AS(estimate_population_grid(locs, spec, 1.5), ConfigError);
  CHECK_THROWS_AS(estimate_population_grid(locs, spec_at(35, 135, 0.0), 0.01),
                  ConfigError);
  CHECK(estimate_population_grid({}, spec, 0.01).total() == 0.0);
}

TEST_CASE("census_correlation is 1 for identical grids") {
  const GridSpec spec = spec_at(35.0, 135.0, 1000.0);
  PopulationGrid g;
  g.spec = spec;
  g.values[{0, 0, 1000.0}] = 100.0;
  g.values[{1, 0, 1000.0}] = 300.0;
  g.values[{0, 1, 1000.0}] = 700.0;
  CHECK(census_correlation(g, g) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("census_correlation zero-fills the union of cells") {
  const GridSpec spec = spec_at(35.0, 135.0, 1000.0);
  PopulationGrid est;
  est.spec = spec;
  est.values[{0, 0, 1000.0}] = 500.0;
  est.values[{1, 0, 1000.0}] = 100.0;

  PopulationGrid census;
  census.spec = spec;
  // Disjoint support: correlation must be strongly negative, which is only
  // possible when missing cells count as zeros.
  census.values[{5, 5, 1000.0}] = 500.0;
  census.values[{6, 5, 1000.0}] = 100.0;
  CHECK(census_correlation(est, census) < 0.0);

  PopulationGrid other;
  other.spec = spec_at(35.0, 135.0, 500.0);
  other.values[{0, 0, 500.0}] = 1.0;
  other.values[{1, 0, 500.0}] = 2.0;
  CHECK_THROWS_AS(census_correlation(est, other), ConfigError);

  PopulationGrid flat;
  flat.spec = spec;
  flat.values[{0, 0, 1000.0}] = 500.0;
  flat.values[{1, 0, 1000.0}] = 500.0;
  CHECK_THROWS_AS(census_correlation(flat, flat), DataError);
}

TEST_CASE("census csv round-trip preserves the grid") {
  const GridSpec spec = spec_at(32.80123, 130.70456, 1000.0);
  PopulationGrid g;
  g.spec = spec;
  g.values[{-2, 3, 1000.0}] = 1200.0;
  g.values[{0, 0, 1000.0}] = 800.0;
  g.values[{4, -1, 1000.0}] = 50.0;

  const std::string csv = census_csv_string(g, "# evaq 0.1.0 config=0\n");
  std::istringstream in(csv);
  const PopulationGrid back = parse_census_csv(in);
  CHECK(back.spec.cell_size_m == 1000.0);
  CHECK(back.spec.origin.lat == doctest::Approx(32.80123).epsilon(1e-9));
  REQUIRE(back.values.size() == 3);
  CHECK(back.values.at({-2, 3, 1000.0}) == doctest::Approx(1200.0));
  CHECK(census_correlation(g, back) == doctest::Approx(1.0).epsilon(1e-12));

  std::istringstream nometa("x,y,population\n0,0,5\n");
  CHECK_THROWS_AS(parse_census_csv(nometa), DataError);
  std::istringstream dup(csv.substr(0, csv.size()) + "0,0,5\n");
  CHECK_THROWS_AS(parse_census_csv(dup), DataError);
}

TEST_CASE("popgrid csv lists the union with both columns") {
  const GridSpec spec = spec_at(35.0, 135.0, 1000.0);
  PopulationGrid est;
  est.spec = spec;
  est.values[{0, 0, 1000.0}] = 500.0;
  est.values[{2, 2, 1000.0}] = 100.0;

  PopulationGrid census;
  census.spec = spec;
  census.values[{0, 0, 1000.0}] = 450.0;
  census.values[{1, 1, 1000.0}] = 50.0;

  const std::string csv = popgrid_csv_string(est, &census, "# evaq 0.1.0 config=0\n");
  CHECK(csv.find("x,y,population,estimated") != std::string::npos);
  int data_rows = 0;
  std::istringstream in(csv);
  std::string line;
  while (std::getline(in, line))
    if (!line.empty() && line[0] != '#' && line.find("x,y") != 0) ++data_rows;
  CHECK(data_rows == 3);

  const std::string solo = popgrid_csv_string(est, nullptr, "# h\n");
  CHECK(solo.find(",0,") != std::string::npos);

  PopulationGrid bad;
  bad.spec = spec_at(36.0, 135.0, 1000.0);
  bad.values[{0, 0, 1000.0}] = 1.0;
  CHECK_THROWS_AS(popgrid_csv_string(est, &bad, "# h\n"), ConfigError);
}
