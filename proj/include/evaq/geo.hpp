#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace evaq {

inline constexpr double kEarthRadiusM = 6'371'000.0;
inline constexpr double kPi = 3.14159265358979323846;

inline double deg2rad(double d) { return d * (kPi / 180.0); }
inline double rad2deg(double r) { return r * (180.0 / kPi); }

struct GeoPoint {
  double lat = 0.0; // degrees WGS84, [-90, 90]
  double lon = 0.0; // degrees WGS84, [-180, 180]

  friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
};

bool valid_geopoint(const GeoPoint& p);

// Great-circle distance on a spherical Earth.
double haversine_m(const GeoPoint& a, const GeoPoint& b);

// End point of a great-circle step of distance_m along bearing_rad
// (0 = north, pi/2 = east).
GeoPoint destination_point(const GeoPoint& p, double bearing_rad,
                           double distance_m);

// Equirectangular tangent plane at `origin`; x east, y north, in meters.
// Adequate at city/prefecture scale.
class LocalProjection {
 public:
  explicit LocalProjection(GeoPoint origin);

  const GeoPoint& origin() const { return origin_; }
  void to_xy(const GeoPoint& p, double& x_m, double& y_m) const;
  GeoPoint from_xy(double x_m, double y_m) const;

 private:
  GeoPoint origin_;
  double cos_lat0_;
};

struct GridCell {
  int x = 0;
  int y = 0;
  double cell_size_m = 0.0;

  friend bool operator==(const GridCell&, const GridCell&) = default;
  friend bool operator<(const GridCell& a, const GridCell& b) {
    if (a.x != b.x) return a.x < b.x;
    if (a.y != b.y) return a.y < b.y;
    return a.cell_size_m < b.cell_size_m;
  }
};

// Cell of `p` in the square grid tiling the equirectangular plane at
// `origin`. Deterministic floor indexing.
GridCell grid_index(const GeoPoint& p, double cell_size_m,
                    const GeoPoint& origin);
GeoPoint cell_center(const GridCell& cell, const GeoPoint& origin);

struct LguRecord {
  std::string lgu_id;
  std::string name;
  GeoPoint centroid;
  std::vector<GeoPoint> boundary; // closed ring when non-empty
};

// Ray-casting point-in-polygon in (lon, lat) coordinates.
bool point_in_polygon(const GeoPoint& p, const std::vector<GeoPoint>& ring);

// Polygon containment first (ascending lgu_id), nearest centroid otherwise;
// centroid ties also break by ascending lgu_id.
std::string assign_lgu(const GeoPoint& p, const std::vector<LguRecord>& registry);

// lgu.csv: lgu_id,name,centroid_lat,centroid_lon[,boundary_wkt]
std::vector<LguRecord> parse_lgu_csv(std::istream& in);
std::string lgu_csv_string(const std::vector<LguRecord>& registry,
                           const std::string& header_comment);

} // namespace evaq
