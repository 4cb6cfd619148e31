#pragma once

#include <iosfwd>
#include <map>
#include <string>

#include "evaq/geo.hpp"

namespace evaq {

struct GridSpec {
  GeoPoint origin;
  double cell_size_m = 1000.0;

  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

struct PopulationGrid {
  GridSpec spec;
  std::map<GridCell, double> values;

  double total() const;
};

// Per cell: distinct users assigned there (one location per user, estimated
// home by default) scaled by 1/sample_rate. Total = n_users / sample_rate
// before any filtering.
PopulationGrid estimate_population_grid(
    const std::map<std::string, GeoPoint>& user_locations,
    const GridSpec& spec, double sample_rate);

// Pearson correlation over the union of populated cells, zero-filled.
// Grids must share cell size and origin.
double census_correlation(const PopulationGrid& est,
                          const PopulationGrid& census);

// census.csv: x,y,population (grid metadata in a '#' header line)
std::string census_csv_string(const PopulationGrid& grid,
                              const std::string& header_comment);
PopulationGrid parse_census_csv(std::istream& in);

// popgrid.csv: x,y,population,estimated over the union of cells; the census
// column is zero when no census grid is supplied.
std::string popgrid_csv_string(const PopulationGrid& est,
                               const PopulationGrid* census,
                               const std::string& header_comment);

} // namespace evaq
