#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cropmap/data/schema.hpp"
#include "cropmap/dataset/normalization.hpp"
#include "cropmap/mapping/grid_io.hpp"
#include "cropmap/models/model_io.hpp"

namespace cropmap::mapping {

/// Row-major pixels, each a full 12 x 18 series whose mask marks gaps.
struct FeatureTile {
  std::string tile_id;
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  GeoTransform geo;
  std::vector<data::PixelTimeSeries> pixels;
};

struct PredictionTile {
  std::string tile_id;
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  GeoTransform geo;
  double threshold = 0.5;
  std::vector<float> probability;
  std::vector<std::uint8_t> binary;

  std::size_t nodata_count() const;
  std::size_t cropland_count() const;
};

/// True when any of `channels` is masked in every month.
bool is_nodata_pixel(const data::PixelTimeSeries& pixel, std::span<const std::size_t> channels);

/// Per-pixel normalize and predict. A pixel whose model channels include one
/// that is missing in all months is nodata in both grids; elsewhere binary is
/// 1 exactly when the stored float probability is >= threshold.
PredictionTile predict_tile(const models::ModelFile& model, const dataset::NormStats& stats,
                            const FeatureTile& tile, double threshold = 0.5);

/// Copies the window [x0, x0+w) x [y0, y0+h) into a new tile with its own
/// geotransform.
FeatureTile crop_tile(const FeatureTile& tile, std::uint32_t x0, std::uint32_t y0, std::uint32_t w,
                      std::uint32_t h, std::string tile_id);

}  // namespace cropmap::mapping
