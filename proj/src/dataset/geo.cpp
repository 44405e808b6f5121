#include "cropmap/dataset/geo.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace cropmap::dataset {

double haversine_m(LatLon a, LatLon b) {
  constexpr double kDeg = std::numbers::pi / 180.0;
  const double phi1 = a.lat * kDeg;
  const double phi2 = b.lat * kDeg;
  const double dphi = (b.lat - a.lat) * kDeg;
  const double dlambda = (b.lon - a.lon) * kDeg;
  const double s1 = std::sin(dphi / 2.0);
  const double s2 = std::sin(dlambda / 2.0);
  const double h = std::clamp(s1 * s1 + std::cos(phi1) * std::cos(phi2) * s2 * s2, 0.0, 1.0);
  return 2.0 * kEarthRadiusM * std::asin(std::sqrt(h));
}

}  // namespace cropmap::dataset
