#include "evaq/geo.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <sstream>

#include "evaq/csvio.hpp"
#include "evaq/errors.hpp"

namespace evaq {

bool valid_geopoint(const GeoPoint& p) {
  return std::isfinite(p.lat) && std::isfinite(p.lon) && p.lat >= -90.0 &&
         p.lat <= 90.0 && p.lon >= -180.0 && p.lon <= 180.0;
}

static void require_valid(const GeoPoint& p) {
  if (!valid_geopoint(p)) {
    throw DataError("invalid GeoPoint (lat=" + fmt_general(p.lat) +
                    ", lon=" + fmt_general(p.lon) + ")");
  }
}

double haversine_m(const GeoPoint& a, const GeoPoint& b) {
  require_valid(a);
  require_valid(b);
  const double la1 = deg2rad(a.lat);
  const double la2 = deg2rad(b.lat);
  const double dla = deg2rad(b.lat - a.lat);
  const double dlo = deg2rad(b.lon - a.lon);
  const double s1 = std::sin(dla / 2.0);
  const double s2 = std::sin(dlo / 2.0);
  const double h = s1 * s1 + std::cos(la1) * std::cos(la2) * s2 * s2;
  return 2.0 * kEarthRadiusM * std::asin(std::min(1.0, std::sqrt(h)));
}

GeoPoint destination_point(const GeoPoint& p, double bearing_rad,
                           double distance_m) {
  require_valid(p);
  const double delta = distance_m / kEarthRadiusM;
  const double la1 = deg2rad(p.lat);
  const double lo1 = deg2rad(p.lon);
  const double sin_la2 = std::sin(la1) * std::cos(delta) +
                         std::cos(la1) * std::sin(delta) * std::cos(bearing_rad);
  const double la2 = std::asin(std::clamp(sin_la2, -1.0, 1.0));
  const double lo2 =
      lo1 + std::atan2(std::sin(bearing_rad) * std::sin(delta) * std::cos(la1),
                       std::cos(delta) - std::sin(la1) * sin_la2);
  GeoPoint out{rad2deg(la2), rad2deg(lo2)};
  if (out.lon > 180.0) out.lon -= 360.0;
  if (out.lon < -180.0) out.lon += 360.0;
  return out;
}

LocalProjection::LocalProjection(GeoPoint origin) : origin_(origin) {
  require_valid(origin);
  cos_lat0_ = std::cos(deg2rad(origin.lat));
}

void LocalProjection::to_xy(const GeoPoint& p, double& x_m, double& y_m) const {
  x_m = kEarthRadiusM * deg2rad(p.lon - origin_.lon) * cos_lat0_;
  y_m = kEarthRadiusM * deg2rad(p.lat - origin_.lat);
}

GeoPoint LocalProjection::from_xy(double x_m, double y_m) const {
  GeoPoint p;
  p.lat = origin_.lat + rad2deg(y_m / kEarthRadiusM);
  p.lon = origin_.lon + rad2deg(x_m / (kEarthRadiusM * cos_lat0_));
  return p;
}

GridCell grid_index(const GeoPoint& p, double cell_size_m,
                    const GeoPoint& origin) {
  if (!(cell_size_m > 0.0)) {
    throw ConfigError("cell_size_m must be > 0");
  }
  require_valid(p);
  LocalProjection proj(origin);
  double x_m, y_m;
  proj.to_xy(p, x_m, y_m);
  GridCell c;
  c.x = static_cast<int>(std::floor(x_m / cell_size_m));
  c.y = static_cast<int>(std::floor(y_m / cell_size_m));
  c.cell_size_m = cell_size_m;
  return c;
}

GeoPoint cell_center(const GridCell& cell, const GeoPoint& origin) {
  LocalProjection proj(origin);
  return proj.from_xy((cell.x + 0.5) * cell.cell_size_m,
                      (cell.y + 0.5) * cell.cell_size_m);
}

bool point_in_polygon(const GeoPoint& p, const std::vector<GeoPoint>& ring) {
  // Even-odd crossing count over the (lon, lat) plane. The ring may repeat
  // its first vertex; the wrap edge is handled either way.
  std::size_t n = ring.size();
  if (n >= 2 && ring.front() == ring.back()) --n;
  if (n < 3) return false;
  bool inside = false;
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const GeoPoint& a = ring[i];
    const GeoPoint& b = ring[j];
    const bool crosses = (a.lat > p.lat) != (b.lat > p.lat);
    if (crosses) {
      double x_at =
          a.lon + (p.lat - a.lat) / (b.lat - a.lat) * (b.lon - a.lon);
      if (p.lon < x_at) inside = !inside;
    }
  }
  return inside;
}

std::string assign_lgu(const GeoPoint& p,
                       const std::vector<LguRecord>& registry) {
  if (registry.empty()) {
    throw DataError("assign_lgu: empty LGU registry");
  }
  require_valid(p);

  std::vector<const LguRecord*> order;
  order.reserve(registry.size());
  for (const auto& r : registry) order.push_back(&r);
  std::sort(order.begin(), order.end(),
            [](const LguRecord* a, const LguRecord* b) {
              return a->lgu_id < b->lgu_id;
            });

  for (const LguRecord* r : order) {
    if (!r->boundary.empty() && point_in_polygon(p, r->boundary)) {
      return r->lgu_id;
    }
  }

  const LguRecord* best = nullptr;
  double best_d = std::numeric_limits<double>::infinity();
  for (const LguRecord* r : order) {
    double d = haversine_m(p, r->centroid);
    if (d < best_d) {
      best_d = d;
      best = r;
    }
  }
  return best->lgu_id;
}

static std::vector<GeoPoint> parse_wkt_polygon(const std::string& wkt) {
  // Minimal "POLYGON ((lon lat, lon lat, ...))" reader; outer ring only.
  auto open = wkt.find("((");
  auto close = wkt.find("))");
  if (wkt.find("POLYGON") == std::string::npos || open == std::string::npos ||
      close == std::string::npos || close <= open) {
    throw DataError("invalid boundary_wkt: '" + wkt + "'");
  }
  std::string body = wkt.substr(open + 2, close - open - 2);
  // Inner rings are not supported; cut at the first ')'.
  if (auto cut = body.find(')'); cut != std::string::npos) body = body.substr(0, cut);
  std::vector<GeoPoint> ring;
  std::stringstream ss(body);
  std::string pair;
  while (std::getline(ss, pair, ',')) {
    std::stringstream ps(pair);
    double lon, lat;
    if (!(ps >> lon >> lat)) {
      throw DataError("invalid coordinate in boundary_wkt: '" + pair + "'");
    }
    ring.push_back(GeoPoint{lat, lon});
  }
  if (ring.size() < 4 || !(ring.front() == ring.back())) {
    throw DataError("boundary_wkt ring must be closed with >= 3 vertices");
  }
  return ring;
}

static std::string wkt_of(const std::vector<GeoPoint>& ring) {
  std::string s = "POLYGON ((";
  for (std::size_t i = 0; i < ring.size(); ++i) {
    if (i) s += ", ";
    s += fmt_fixed(ring[i].lon, 7) + " " + fmt_fixed(ring[i].lat, 7);
  }
  s += "))";
  return s;
}

std::vector<LguRecord> parse_lgu_csv(std::istream& in) {
  std::vector<LguRecord> out;
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    strip_cr(line);
    if (is_comment_or_blank(line)) continue;
    auto f = split_csv_line(line);
    if (!have_header) {
      if (f.size() < 4 || f[0] != "lgu_id" || f[1] != "name" ||
          f[2] != "centroid_lat" || f[3] != "centroid_lon") {
        throw DataError("lgu.csv: missing or malformed header");
      }
      have_header = true;
      continue;
    }
    if (f.size() < 4) throw DataError("lgu.csv: short row: '" + line + "'");
    LguRecord r;
    r.lgu_id = f[0];
    r.name = f[1];
    r.centroid.lat = parse_double_strict(f[2], "centroid_lat");
    r.centroid.lon = parse_double_strict(f[3], "centroid_lon");
    if (!valid_geopoint(r.centroid)) {
      throw DataError("lgu.csv: centroid out of range for " + r.lgu_id);
    }
    if (f.size() >= 5 && !f[4].empty()) r.boundary = parse_wkt_polygon(f[4]);
    if (r.lgu_id.empty()) throw DataError("lgu.csv: empty lgu_id");
    out.push_back(std::move(r));
  }
  if (!have_header) throw DataError("lgu.csv: missing or malformed header");
  for (std::size_t i = 1; i < out.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (out[i].lgu_id == out[j].lgu_id) {
        throw DataError("lgu.csv: duplicate lgu_id '" + out[i].lgu_id + "'");
      }
    }
  }
  return out;
}

std::string lgu_csv_string(const std::vector<LguRecord>& registry,
                           const std::string& header_comment) {
  std::string s = header_comment;
  bool any_boundary = false;
  for (const auto& r : registry) any_boundary |= !r.boundary.empty();
  s += any_boundary ? "lgu_id,name,centroid_lat,centroid_lon,boundary_wkt\n"
                    : "lgu_id,name,centroid_lat,centroid_lon\n";
  for (const auto& r : registry) {
    s += csv_quote(r.lgu_id) + "," + csv_quote(r.name) + "," +
         fmt_fixed(r.centroid.lat, 7) + "," + fmt_fixed(r.centroid.lon, 7);
    if (any_boundary) {
      s += ",";
      if (!r.boundary.empty()) s += csv_quote(wkt_of(r.boundary));
    }
    s += "\n";
  }
  return s;
}

} // namespace evaq
