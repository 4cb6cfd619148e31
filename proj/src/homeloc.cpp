#include "evaq/homeloc.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <sstream>

#include "evaq/csvio.hpp"
#include "evaq/errors.hpp"
#include "evaq/timeutil.hpp"

namespace evaq {

std::vector<Mode> mean_shift(const std::vector<GeoPoint>& points,
                             const std::vector<double>& weights,
                             double bandwidth_m, double tol_m, int max_iter) {
  if (points.empty()) throw DataError("mean_shift: no input points");
  if (points.size() != weights.size())
    throw DataError("mean_shift: points/weights size mismatch");
  if (!(bandwidth_m > 0.0)) throw ConfigError("mean_shift: bandwidth_m must be > 0");
  if (!(tol_m > 0.0)) throw ConfigError("mean_shift: tol_m must be > 0");
  if (max_iter <= 0) throw ConfigError("mean_shift: max_iter must be > 0");

  double wsum = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w))
      throw DataError("mean_shift: weights must be finite and >= 0");
    wsum += w;
  }
  if (!(wsum > 0.0)) throw DataError("mean_shift: total weight is zero");

  // Project around the weighted centroid; all distances below are planar.
  double clat = 0.0, clon = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    clat += weights[i] * points[i].lat;
    clon += weights[i] * points[i].lon;
  }
  LocalProjection proj(GeoPoint{clat / wsum, clon / wsum});

  const std::size_t n = points.size();
  std::vector<double> px(n), py(n);
  for (std::size_t i = 0; i < n; ++i) proj.to_xy(points[i], px[i], py[i]);

  const double inv2h2 = 1.0 / (2.0 * bandwidth_m * bandwidth_m);
  std::vector<double> cx(px), cy(py);
  for (std::size_t i = 0; i < n; ++i) {
    for (int it = 0; it < max_iter; ++it) {
      double sw = 0.0, sx = 0.0, sy = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        const double dx = px[j] - cx[i];
        const double dy = py[j] - cy[i];
        const double k = weights[j] * std::exp(-(dx * dx + dy * dy) * inv2h2);
        sw += k;
        sx += k * px[j];
        sy += k * py[j];
      }
      if (!(sw > 0.0)) break;
      const double nx = sx / sw, ny = sy / sw;
      const double shift = std::hypot(nx - cx[i], ny - cy[i]);
      cx[i] = nx;
      cy[i] = ny;
      if (shift < tol_m) break;
    }
  }

  // Merge converged points: first mode within bandwidth/2 wins, its position
  // is the mass-weighted mean of the members.
  struct PlaneMode {
    double x, y, mass;
  };
  std::vector<PlaneMode> acc;
  const double merge_r = bandwidth_m / 2.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(weights[i] > 0.0)) continue;
    bool merged = false;
    for (auto& m : acc) {
      if (std::hypot(cx[i] - m.x, cy[i] - m.y) <= merge_r) {
        const double tot = m.mass + weights[i];
        m.x = (m.x * m.mass + cx[i] * weights[i]) / tot;
        m.y = (m.y * m.mass + cy[i] * weights[i]) / tot;
        m.mass = tot;
        merged = true;
        break;
      }
    }
    if (!merged) acc.push_back(PlaneMode{cx[i], cy[i], weights[i]});
  }

  std::vector<Mode> out;
  out.reserve(acc.size());
  for (const auto& m : acc)
    out.push_back(Mode{proj.from_xy(m.x, m.y), m.mass});
  std::sort(out.begin(), out.end(), [](const Mode& a, const Mode& b) {
    if (a.mass != b.mass) return a.mass > b.mass;
    if (a.position.lat != b.position.lat) return a.position.lat < b.position.lat;
    return a.position.lon < b.position.lon;
  });
  return out;
}

std::optional<HomeEstimate> estimate_home(const std::string& user_id,
                                          const std::vector<NightStay>& sps,
                                          std::int64_t tz_offset_s,
                                          double bandwidth_m,
                                          std::size_t min_nights,
                                          double tol_m, int max_iter) {
  if (sps.empty()) return std::nullopt;

  std::vector<Staypoint> raw;
  std::vector<GeoPoint> pts;
  std::vector<double> w;
  raw.reserve(sps.size());
  pts.reserve(sps.size());
  w.reserve(sps.size());
  double total_w = 0.0;
  for (const auto& ns : sps) {
    raw.push_back(ns.sp);
    pts.push_back(ns.sp.center);
    w.push_back(ns.weight_s);
    total_w += ns.weight_s;
  }
  if (distinct_nights(raw, tz_offset_s) < min_nights) return std::nullopt;

  const auto modes = mean_shift(pts, w, bandwidth_m, tol_m, max_iter);
  if (modes.empty()) return std::nullopt;

  HomeEstimate est;
  est.user_id = user_id;
  est.home = modes.front().position;
  est.total_night_weight_s = total_w;
  est.n_staypoints = sps.size();
  return est;
}

std::string homes_csv_string(const std::map<std::string, HomeEstimate>& homes,
                             const std::string& header_comment) {
  std::string out = header_comment;
  out += "user_id,home_lat,home_lon,lgu_id,n_staypoints,total_night_weight_s\n";
  for (const auto& [uid, h] : homes) {
    out += csv_quote(uid);
    out += ',';
    out += fmt_fixed(h.home.lat, 7);
    out += ',';
    out += fmt_fixed(h.home.lon, 7);
    out += ',';
    out += csv_quote(h.lgu_id);
    out += ',';
    out += std::to_string(h.n_staypoints);
    out += ',';
    out += fmt_fixed(h.total_night_weight_s, 1);
    out += '\n';
  }
  return out;
}

std::map<std::string, HomeEstimate> parse_homes_csv(std::istream& in) {
  std::map<std::string, HomeEstimate> out;
  std::string line;
  bool saw_header = false;
  while (std::getline(in, line)) {
    strip_cr(line);
    if (is_comment_or_blank(line)) continue;
    if (!saw_header) {
      if (line != "user_id,home_lat,home_lon,lgu_id,n_staypoints,total_night_weight_s")
        throw DataError("homes.csv: unexpected header: " + line);
      saw_header = true;
      continue;
    }
    const auto f = split_csv_line(line);
    if (f.size() != 6)
      throw DataError("homes.csv: expected 6 fields, got " +
                      std::to_string(f.size()));
    HomeEstimate h;
    h.user_id = f[0];
    h.home.lat = parse_double_strict(f[1], "home_lat");
    h.home.lon = parse_double_strict(f[2], "home_lon");
    h.lgu_id = f[3];
    h.n_staypoints =
        static_cast<std::size_t>(parse_int_strict(f[4], "n_staypoints"));
    h.total_night_weight_s = parse_double_strict(f[5], "total_night_weight_s");
    if (h.user_id.empty()) throw DataError("homes.csv: empty user_id");
    if (!valid_geopoint(h.home)) throw DataError("homes.csv: invalid home coordinates");
    if (!out.emplace(h.user_id, h).second)
      throw DataError("homes.csv: duplicate user_id " + h.user_id);
  }
  if (!saw_header) throw DataError("homes.csv: missing header");
  return out;
}

} // namespace evaq
