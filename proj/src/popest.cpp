#include "evaq/popest.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <set>
#include <vector>

#include "evaq/csvio.hpp"
#include "evaq/errors.hpp"

namespace evaq {

namespace {

constexpr const char* kGridMetaPrefix = "# grid ";

std::string grid_meta_line(const GridSpec& spec) {
  return std::string(kGridMetaPrefix) + "origin_lat=" +
         fmt_general(spec.origin.lat) + " origin_lon=" +
         fmt_general(spec.origin.lon) + " cell_size_m=" +
         fmt_general(spec.cell_size_m) + "\n";
}

bool parse_grid_meta(const std::string& line, GridSpec& spec) {
  if (line.rfind(kGridMetaPrefix, 0) != 0) return false;
  double lat = 0.0, lon = 0.0, cell = 0.0;
  if (std::sscanf(line.c_str(), "# grid origin_lat=%lf origin_lon=%lf cell_size_m=%lf",
                  &lat, &lon, &cell) != 3)
    throw DataError("grid metadata line is malformed: " + line);
  spec.origin = GeoPoint{lat, lon};
  spec.cell_size_m = cell;
  return true;
}

} // namespace

double PopulationGrid::total() const {
  double t = 0.0;
  for (const auto& [cell, v] : values) t += v;
  return t;
}

PopulationGrid estimate_population_grid(
    const std::map<std::string, GeoPoint>& user_locations,
    const GridSpec& spec, double sample_rate) {
  if (!(sample_rate > 0.0) || !(sample_rate <= 1.0))
    throw ConfigError("estimate_population_grid: sample_rate must be in (0, 1]");
  if (!(spec.cell_size_m > 0.0))
    throw ConfigError("estimate_population_grid: cell_size_m must be > 0");

  std::map<GridCell, std::int64_t> counts;
  for (const auto& [uid, pos] : user_locations)
    counts[grid_index(pos, spec.cell_size_m, spec.origin)] += 1;

  PopulationGrid grid;
  grid.spec = spec;
  for (const auto& [cell, c] : counts)
    grid.values[cell] = static_cast<double>(c) / sample_rate;
  return grid;
}

double census_correlation(const PopulationGrid& est,
                          const PopulationGrid& census) {
  if (!(est.spec == census.spec))
    throw ConfigError("census_correlation: grid origin/cell size mismatch");

  std::set<GridCell> cells;
  for (const auto& [c, v] : est.values) cells.insert(c);
  for (const auto& [c, v] : census.values) cells.insert(c);
  if (cells.size() < 2)
    throw DataError("census_correlation: need at least 2 cells");

  auto value_of = [](const PopulationGrid& g, const GridCell& c) {
    auto it = g.values.find(c);
    return it == g.values.end() ? 0.0 : it->second;
  };
  const double n = static_cast<double>(cells.size());
  double mx = 0.0, my = 0.0;
  for (const auto& c : cells) {
    mx += value_of(est, c);
    my += value_of(census, c);
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (const auto& c : cells) {
    const double dx = value_of(est, c) - mx;
    const double dy = value_of(census, c) - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (!(sxx > 0.0) || !(syy > 0.0))
    throw DataError("census_correlation: zero variance grid");
  return sxy / std::sqrt(sxx * syy);
}

std::string census_csv_string(const PopulationGrid& grid,
                              const std::string& header_comment) {
  std::string out = header_comment;
  out += grid_meta_line(grid.spec);
  out += "x,y,population\n";
  for (const auto& [cell, v] : grid.values) {
    out += std::to_string(cell.x);
    out += ',';
    out += std::to_string(cell.y);
    out += ',';
    out += fmt_general(v);
    out += '\n';
  }
  return out;
}

PopulationGrid parse_census_csv(std::istream& in) {
  PopulationGrid grid;
  bool saw_meta = false, saw_header = false;
  std::string line;
  while (std::getline(in, line)) {
    strip_cr(line);
    if (is_comment_or_blank(line)) {
      if (parse_grid_meta(line, grid.spec)) saw_meta = true;
      continue;
    }
    if (!saw_header) {
      if (line != "x,y,population")
        throw DataError("census.csv: unexpected header: " + line);
      saw_header = true;
      continue;
    }
    const auto f = split_csv_line(line);
    if (f.size() != 3)
      throw DataError("census.csv: expected 3 fields, got " +
                      std::to_string(f.size()));
    GridCell cell;
    cell.x = static_cast<int>(parse_int_strict(f[0], "x"));
    cell.y = static_cast<int>(parse_int_strict(f[1], "y"));
    cell.cell_size_m = grid.spec.cell_size_m;
    const double v = parse_double_strict(f[2], "population");
    if (v < 0.0) throw DataError("census.csv: negative population");
    if (!grid.values.emplace(cell, v).second)
      throw DataError("census.csv: duplicate cell");
  }
  if (!saw_header) throw DataError("census.csv: missing header");
  if (!saw_meta)
    throw DataError("census.csv: missing '# grid ...' metadata line");
  return grid;
}

std::string popgrid_csv_string(const PopulationGrid& est,
                               const PopulationGrid* census,
                               const std::string& header_comment) {
  if (census && !(est.spec == census->spec))
    throw ConfigError("popgrid: grid origin/cell size mismatch");
  std::string out = header_comment;
  out += grid_meta_line(est.spec);
  out += "x,y,population,estimated\n";

  std::map<GridCell, std::pair<double, double>> rows;
  for (const auto& [c, v] : est.values) rows[c].second = v;
  if (census)
    for (const auto& [c, v] : census->values) rows[c].first = v;
  for (const auto& [cell, pv] : rows) {
    out += std::to_string(cell.x);
    out += ',';
    out += std::to_string(cell.y);
    out += ',';
    out += fmt_general(pv.first);
    out += ',';
    out += fmt_general(pv.second);
    out += '\n';
  }
  return out;
}

} // namespace evaq
