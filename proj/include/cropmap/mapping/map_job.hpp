#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cropmap/mapping/predict_tile.hpp"

namespace cropmap::mapping {

struct ManifestEntry {
  std::string tile_id;
  /// Relative paths resolve against the manifest's directory.
  std::filesystem::path feature_file;
  GeoTransform geo;
  std::uint32_t width = 0;
  std::uint32_t height = 0;
};

/// A JSON array of {tile_id, feature_file, origin_lon, origin_lat,
/// pixel_size_deg, width, height}.
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path);
void write_manifest(std::span<const ManifestEntry> entries, const std::filesystem::path& path);

/// Throws InvalidArgument on duplicate ids, bad geotransforms or tiles whose
/// footprints overlap.
void validate_manifest(std::span<const ManifestEntry> entries);

FeatureTile load_feature_tile(const ManifestEntry& entry);

struct TileReport {
  std::string tile_id;
  bool ok = false;
  std::size_t pixels = 0;
  std::size_t nodata = 0;
  std::size_t cropland = 0;
  /// Cropland share of valid pixels; 0 when none are valid.
  double cropland_fraction = 0.0;
  std::string error;
};

struct MapJobReport {
  double threshold = 0.5;
  /// Sorted by tile id.
  std::vector<TileReport> tiles;

  bool ok() const;
};

/// Output names per tile.
std::filesystem::path probability_grid_path(const std::filesystem::path& dir, const std::string& tile_id);
std::filesystem::path binary_grid_path(const std::filesystem::path& dir, const std::string& tile_id);

/// Writes the two grids of a predicted tile and their sidecars.
void write_prediction_tile(const PredictionTile& tile, const std::filesystem::path& dir);

/// Predicts every manifest tile with `workers` threads, writes grids,
/// sidecars and map_report.json under `out_dir`. Tiles that fail (for
/// example a missing feature file) are recorded and the job goes on.
MapJobReport run_map_job(const models::ModelFile& model, const dataset::NormStats& stats,
                         std::span<const ManifestEntry> manifest, const std::filesystem::path& out_dir,
                         std::size_t workers, double threshold = 0.5);

std::string map_report_json(const MapJobReport& report);

}  // namespace cropmap::mapping
