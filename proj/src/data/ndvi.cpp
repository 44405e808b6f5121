#include "cropmap/data/ndvi.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cropmap/error.hpp"

namespace cropmap::data {

NdviResult compute_ndvi(double red, double nir) {
  if (!(red >= 0.0) || !(nir >= 0.0)) {
    throw InvalidArgument("NDVI needs non-negative reflectances, got red=" + std::to_string(red) +
                          " nir=" + std::to_string(nir));
  }
  const double denom = nir + red;
  if (denom == 0.0) return {0.0, true};
  return {std::clamp((nir - red) / denom, -1.0, 1.0), false};
}

}  // namespace cropmap::data
