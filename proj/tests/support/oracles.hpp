#pragma once

// Reference implementations kept deliberately independent of the library:
// different formulas and algorithms, shared only with the tests.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

namespace oracle {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kEarthRadiusM = 6'371'000.0;

// Maclaurin series for erf, evaluated in long double. Accurate to ~1e-16
// for |x| <= 5; beyond that the CDF is 0/1 to double precision anyway.
inline double erf_series(double x) {
  if (x > 5.9) return 1.0;
  if (x < -5.9) return -1.0;
  const long double t = x;
  long double term = t; // x^(2n+1) / n! at n = 0
  long double sum = t;
  for (int n = 1; n < 220; ++n) {
    term *= -t * t / n;
    sum += term / (2 * n + 1);
  }
  return static_cast<double>(sum * 2.0L / std::sqrt(3.14159265358979323846L));
}

inline double normal_cdf(double x) {
  return 0.5 * (1.0 + erf_series(x / std::sqrt(2.0)));
}

// Spherical law of cosines; a different route to the great-circle distance
// than the haversine form. Ill-conditioned only below ~1 m.
inline double sphere_dist_m(double lat1, double lon1, double lat2, double lon2) {
  const double p1 = lat1 * kPi / 180.0, p2 = lat2 * kPi / 180.0;
  const double dl = (lon2 - lon1) * kPi / 180.0;
  double c = std::sin(p1) * std::sin(p2) + std::cos(p1) * std::cos(p2) * std::cos(dl);
  c = std::clamp(c, -1.0, 1.0);
  return kEarthRadiusM * std::acos(c);
}

// Winding-number containment in (x=lon, y=lat); the library uses ray
// casting. `ring` is (lat, lon) pairs, closed (first == last).
inline bool point_in_ring(double lat, double lon,
                          const std::vector<std::pair<double, double>>& ring) {
  const auto is_left = [](double ax, double ay, double bx, double by, double px,
                          double py) {
    return (bx - ax) * (py - ay) - (px - ax) * (by - ay);
  };
  int winding = 0;
  for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
    const double ay = ring[i].first, ax = ring[i].second;
    const double by = ring[i + 1].first, bx = ring[i + 1].second;
    if (ay <= lat) {
      if (by > lat && is_left(ax, ay, bx, by, lon, lat) > 0) ++winding;
    } else {
      if (by <= lat && is_left(ax, ay, bx, by, lon, lat) < 0) --winding;
    }
  }
  return winding != 0;
}

inline std::int64_t interval_overlap(std::int64_t a0, std::int64_t a1,
                                     std::int64_t b0, std::int64_t b1) {
  const std::int64_t lo = std::max(a0, b0);
  const std::int64_t hi = std::min(a1, b1);
  return hi > lo ? hi - lo : 0;
}

// CDF of f(d) ~ d^-gamma truncated to [lo, hi].
inline double trunc_pareto_cdf(double d, double gamma, double lo, double hi) {
  if (d <= lo) return 0.0;
  if (d >= hi) return 1.0;
  const double b = 1.0 - gamma;
  if (std::abs(b) < 1e-12) return std::log(d / lo) / std::log(hi / lo);
  return (std::pow(d, b) - std::pow(lo, b)) / (std::pow(hi, b) - std::pow(lo, b));
}

// Argmax of the weighted Gaussian KDE on a regular grid in the plane.
struct GridMax {
  double x = 0.0;
  double y = 0.0;
};

inline GridMax kde_grid_argmax(const std::vector<double>& xs,
                               const std::vector<double>& ys,
                               const std::vector<double>& ws, double bandwidth,
                               double step) {
  double xlo = xs[0], xhi = xs[0], ylo = ys[0], yhi = ys[0];
  for (std::size_t i = 0; i < xs.size(); ++i) {
    xlo = std::min(xlo, xs[i]);
    xhi = std::max(xhi, xs[i]);
    ylo = std::min(ylo, ys[i]);
    yhi = std::max(yhi, ys[i]);
  }
  xlo -= bandwidth;
  xhi += bandwidth;
  ylo -= bandwidth;
  yhi += bandwidth;
  GridMax best;
  double best_f = -1.0;
  for (double gy = ylo; gy <= yhi; gy += step) {
    for (double gx = xlo; gx <= xhi; gx += step) {
      double f = 0.0;
      for (std::size_t i = 0; i < xs.size(); ++i) {
        const double dx = gx - xs[i], dy = gy - ys[i];
        f += ws[i] * std::exp(-(dx * dx + dy * dy) / (2.0 * bandwidth * bandwidth));
      }
      if (f > best_f) {
        best_f = f;
        best = GridMax{gx, gy};
      }
    }
  }
  return best;
}

} // namespace oracle
