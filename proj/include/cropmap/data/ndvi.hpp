#pragma once

namespace cropmap::data {

struct NdviResult {
  double value = 0.0;
  bool missing = false;
};

/// (nir - red) / (nir + red). A zero denominator yields 0 flagged missing.
NdviResult compute_ndvi(double red, double nir);

}  // namespace cropmap::data
