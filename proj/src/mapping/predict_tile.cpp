#include "cropmap/mapping/predict_tile.hpp"

#include <algorithm>

#include "cropmap/error.hpp"

namespace cropmap::mapping {

std::size_t PredictionTile::nodata_count() const {
  return static_cast<std::size_t>(std::count(binary.begin(), binary.end(), kBinaryNodata));
}

std::size_t PredictionTile::cropland_count() const {
  return static_cast<std::size_t>(std::count(binary.begin(), binary.end(), std::uint8_t{1}));
}

bool is_nodata_pixel(const data::PixelTimeSeries& pixel, std::span<const std::size_t> channels) {
  return std::any_of(channels.begin(), channels.end(),
                     [&](std::size_t c) { return pixel.channel_fully_missing(c); });
}

PredictionTile predict_tile(const models::ModelFile& model, const dataset::NormStats& stats,
                            const FeatureTile& tile, double threshold) {
  validate_geotransform(tile.geo);
  if (tile.pixels.size() != static_cast<std::size_t>(tile.width) * tile.height) {
    throw InvalidArgument("tile " + tile.tile_id + ": " + std::to_string(tile.pixels.size()) +
                          " pixels for " + std::to_string(tile.width) + "x" + std::to_string(tile.height));
  }
  if (stats.channel_names != data::FeatureSchema::standard().names()) {
    throw InvalidArgument("normalization stats do not match the feature schema");
  }
  const auto channels = model.channel_indices();

  PredictionTile out;
  out.tile_id = tile.tile_id;
  out.width = tile.width;
  out.height = tile.height;
  out.geo = tile.geo;
  out.threshold = threshold;
  out.probability.assign(tile.pixels.size(), kProbabilityNodata);
  out.binary.assign(tile.pixels.size(), kBinaryNodata);

  std::vector<std::size_t> valid;
  std::vector<std::vector<double>> samples;
  for (std::size_t i = 0; i < tile.pixels.size(); ++i) {
    if (is_nodata_pixel(tile.pixels[i], channels)) continue;
    valid.push_back(i);
    samples.push_back(dataset::apply_normalization(tile.pixels[i], stats, channels));
  }
  if (samples.empty()) return out;

  const auto probs = models::predict_proba(model, samples);
  for (std::size_t k = 0; k < valid.size(); ++k) {
    const auto p = static_cast<float>(probs[k]);
    out.probability[valid[k]] = p;
    out.binary[valid[k]] = static_cast<double>(p) >= threshold ? 1 : 0;
  }
  return out;
}

FeatureTile crop_tile(const FeatureTile& tile, std::uint32_t x0, std::uint32_t y0, std::uint32_t w,
                      std::uint32_t h, std::string tile_id) {
  if (w == 0 || h == 0 || x0 + w > tile.width || y0 + h > tile.height) {
    throw InvalidArgument("crop window lies outside tile " + tile.tile_id);
  }
  FeatureTile out;
  out.tile_id = std::move(tile_id);
  out.width = w;
  out.height = h;
  out.geo = {tile.geo.origin_lon + x0 * tile.geo.pixel_size_deg,
             tile.geo.origin_lat - y0 * tile.geo.pixel_size_deg, tile.geo.pixel_size_deg};
  out.pixels.reserve(static_cast<std::size_t>(w) * h);
  for (std::uint32_t y = y0; y < y0 + h; ++y) {
    const auto row = tile.pixels.begin() + static_cast<std::ptrdiff_t>(y) * tile.width;
    out.pixels.insert(out.pixels.end(), row + x0, row + x0 + w);
  }
  return out;
}

}  // namespace cropmap::mapping
