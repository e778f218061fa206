#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>

namespace transtte::geo {

inline constexpr double kEarthRadiusM = 6371008.8;

inline double deg2rad(double deg) { return deg * std::numbers::pi / 180.0; }

/// Great-circle distance in meters.
inline double haversine_m(double lat1, double lon1, double lat2, double lon2) {
  const double p1 = deg2rad(lat1);
  const double p2 = deg2rad(lat2);
  const double dp = p2 - p1;
  const double dl = deg2rad(lon2 - lon1);
  const double a = std::sin(dp / 2) * std::sin(dp / 2) +
                   std::cos(p1) * std::cos(p2) * std::sin(dl / 2) * std::sin(dl / 2);
  return 2.0 * kEarthRadiusM * std::asin(std::min(1.0, std::sqrt(a)));
}

/// Local equirectangular frame centered on (lat0, lon0); coordinates in meters.
struct LocalFrame {
  double lat0;
  double lon0;
  double cos_lat0;

  LocalFrame(double lat, double lon) : lat0(lat), lon0(lon), cos_lat0(std::cos(deg2rad(lat))) {}

  double x(double lon) const { return kEarthRadiusM * deg2rad(lon - lon0) * cos_lat0; }
  double y(double lat) const { return kEarthRadiusM * deg2rad(lat - lat0); }
};

/// Distance from point P to the chord AB, measured in a local equirectangular
/// projection centered on the chord midpoint.
inline double point_to_chord_m(double plat, double plon, double alat, double alon,
                               double blat, double blon) {
  const LocalFrame frame((alat + blat) / 2.0, (alon + blon) / 2.0);
  const double ax = frame.x(alon), ay = frame.y(alat);
  const double bx = frame.x(blon), by = frame.y(blat);
  const double px = frame.x(plon), py = frame.y(plat);
  const double dx = bx - ax, dy = by - ay;
  const double len2 = dx * dx + dy * dy;
  double t = 0.0;
  if (len2 > 0.0) {
    t = ((px - ax) * dx + (py - ay) * dy) / len2;
    t = std::clamp(t, 0.0, 1.0);
  }
  const double cx = ax + t * dx - px;
  const double cy = ay + t * dy - py;
  return std::hypot(cx, cy);
}

}  // namespace transtte::geo
