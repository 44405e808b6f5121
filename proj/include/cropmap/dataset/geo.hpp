#pragma once

namespace cropmap::dataset {

inline constexpr double kEarthRadiusM = 6'371'000.0;

struct LatLon {
  double lat = 0.0;
  double lon = 0.0;
};

/// Great-circle distance in metres on a sphere of radius kEarthRadiusM.
double haversine_m(LatLon a, LatLon b);

}  // namespace cropmap::dataset
