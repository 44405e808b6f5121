#include "cropmap/mapping/map_job.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <set>
#include <thread>

#include <json.hpp>

#include "cropmap/data/feature_container.hpp"
#include "cropmap/error.hpp"

namespace cropmap::mapping {

using nlohmann::ordered_json;

namespace {

// Footprint edges are compared with this slack so that tiles sharing an edge
// are not reported as overlapping because of rounding.
constexpr double kEdgeSlack = 1e-9;

struct Box {
  double west, east, south, north;
};

Box footprint(const ManifestEntry& e) {
  return {e.geo.origin_lon, e.geo.origin_lon + e.width * e.geo.pixel_size_deg,
          e.geo.origin_lat - e.height * e.geo.pixel_size_deg, e.geo.origin_lat};
}

bool overlaps(const Box& a, const Box& b) {
  return a.west < b.east - kEdgeSlack && b.west < a.east - kEdgeSlack && a.south < b.north - kEdgeSlack &&
         b.south < a.north - kEdgeSlack;
}

TileReport run_tile(const models::ModelFile& model, const dataset::NormStats& stats, const ManifestEntry& entry,
                    const std::filesystem::path& out_dir, double threshold) {
  TileReport r;
  r.tile_id = entry.tile_id;
  r.pixels = static_cast<std::size_t>(entry.width) * entry.height;
  try {
    if (!std::filesystem::exists(entry.feature_file)) {
      throw FormatError("missing feature file " + entry.feature_file.string());
    }
    const auto prediction = predict_tile(model, stats, load_feature_tile(entry), threshold);
    write_prediction_tile(prediction, out_dir);
    r.nodata = prediction.nodata_count();
    r.cropland = prediction.cropland_count();
    const std::size_t valid = r.pixels - r.nodata;
    r.cropland_fraction = valid == 0 ? 0.0 : static_cast<double>(r.cropland) / static_cast<double>(valid);
    r.ok = true;
  } catch (const std::exception& e) {
    r.error = e.what();
  }
  return r;
}

}  // namespace

bool MapJobReport::ok() const {
  return std::all_of(tiles.begin(), tiles.end(), [](const TileReport& t) { return t.ok; });
}

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open manifest " + path.string());
  const auto base = path.parent_path();
  try {
    const auto j = ordered_json::parse(in);
    if (!j.is_array()) throw FormatError(path.string() + ": manifest must be a JSON array");
    std::vector<ManifestEntry> out;
    for (const auto& t : j) {
      ManifestEntry e;
      e.tile_id = t.at("tile_id").get<std::string>();
      e.feature_file = t.at("feature_file").get<std::string>();
      if (e.feature_file.is_relative()) e.feature_file = base / e.feature_file;
      e.geo = {t.at("origin_lon").get<double>(), t.at("origin_lat").get<double>(),
               t.at("pixel_size_deg").get<double>()};
      e.width = t.at("width").get<std::uint32_t>();
      e.height = t.at("height").get<std::uint32_t>();
      out.push_back(std::move(e));
    }
    return out;
  } catch (const ordered_json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_manifest(std::span<const ManifestEntry> entries, const std::filesystem::path& path) {
  ordered_json j = ordered_json::array();
  for (const auto& e : entries) {
    j.push_back({{"tile_id", e.tile_id},
                 {"feature_file", e.feature_file.generic_string()},
                 {"origin_lon", e.geo.origin_lon},
                 {"origin_lat", e.geo.origin_lat},
                 {"pixel_size_deg", e.geo.pixel_size_deg},
                 {"width", e.width},
                 {"height", e.height}});
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write manifest " + path.string());
  out << j.dump(2) << '\n';
}

void validate_manifest(std::span<const ManifestEntry> entries) {
  std::set<std::string> ids;
  std::vector<Box> boxes;
  for (const auto& e : entries) {
    if (e.tile_id.empty() || e.tile_id.find_first_of("/\\") != std::string::npos) {
      throw InvalidArgument("manifest: invalid tile id '" + e.tile_id + "'");
    }
    if (!ids.insert(e.tile_id).second) throw InvalidArgument("manifest: duplicate tile id '" + e.tile_id + "'");
    if (e.width == 0 || e.height == 0) throw InvalidArgument("manifest: tile '" + e.tile_id + "' is empty");
    validate_geotransform(e.geo);
    boxes.push_back(footprint(e));
  }
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    for (std::size_t j = i + 1; j < boxes.size(); ++j) {
      if (overlaps(boxes[i], boxes[j])) {
        throw InvalidArgument("manifest: tiles '" + entries[i].tile_id + "' and '" + entries[j].tile_id +
                              "' overlap");
      }
    }
  }
}

FeatureTile load_feature_tile(const ManifestEntry& entry) {
  FeatureTile tile;
  tile.tile_id = entry.tile_id;
  tile.width = entry.width;
  tile.height = entry.height;
  tile.geo = entry.geo;
  tile.pixels = data::read_feature_series(entry.feature_file);
  if (tile.pixels.size() != static_cast<std::size_t>(entry.width) * entry.height) {
    throw FormatError("tile " + entry.tile_id + ": feature file holds " + std::to_string(tile.pixels.size()) +
                      " pixels, manifest says " + std::to_string(entry.width) + "x" +
                      std::to_string(entry.height));
  }
  return tile;
}

std::filesystem::path probability_grid_path(const std::filesystem::path& dir, const std::string& tile_id) {
  return dir / (tile_id + "_prob.clmp");
}

std::filesystem::path binary_grid_path(const std::filesystem::path& dir, const std::string& tile_id) {
  return dir / (tile_id + "_binary.clmp");
}

void write_prediction_tile(const PredictionTile& tile, const std::filesystem::path& dir) {
  const auto prob = probability_grid_path(dir, tile.tile_id);
  const auto bin = binary_grid_path(dir, tile.tile_id);
  write_grid(prob, tile.width, tile.height, std::span<const float>(tile.probability));
  write_grid(bin, tile.width, tile.height, std::span<const std::uint8_t>(tile.binary));
  GridSidecar s{tile.tile_id, tile.width, tile.height, tile.geo, GridType::float32, kProbabilityNodata,
                tile.threshold};
  write_sidecar(s, std::filesystem::path(prob).replace_extension(".json"));
  s.type = GridType::uint8;
  s.nodata = kBinaryNodata;
  write_sidecar(s, std::filesystem::path(bin).replace_extension(".json"));
}

MapJobReport run_map_job(const models::ModelFile& model, const dataset::NormStats& stats,
                         std::span<const ManifestEntry> manifest, const std::filesystem::path& out_dir,
                         std::size_t workers, double threshold) {
  validate_manifest(manifest);
  if (!(threshold >= 0.0 && threshold <= 1.0)) throw InvalidArgument("threshold must lie in [0, 1]");
  std::filesystem::create_directories(out_dir);

  MapJobReport report;
  report.threshold = threshold;
  report.tiles.resize(manifest.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < manifest.size(); i = next++) {
      report.tiles[i] = run_tile(model, stats, manifest[i], out_dir, threshold);
    }
  };
  const std::size_t n_threads = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(manifest.size(), 1));
  if (n_threads == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < n_threads; ++w) pool.emplace_back(work);
  }
  std::sort(report.tiles.begin(), report.tiles.end(),
            [](const TileReport& a, const TileReport& b) { return a.tile_id < b.tile_id; });

  std::ofstream out(out_dir / "map_report.json", std::ios::binary);
  if (!out) throw FormatError("cannot write map report under " + out_dir.string());
  out << map_report_json(report);
  return report;
}

std::string map_report_json(const MapJobReport& report) {
  ordered_json tiles = ordered_json::array();
  ordered_json errors = ordered_json::array();
  std::size_t pixels = 0, nodata = 0, cropland = 0;
  for (const auto& t : report.tiles) {
    ordered_json tj{{"tile_id", t.tile_id}, {"status", t.ok ? "ok" : "failed"}, {"pixels", t.pixels}};
    if (t.ok) {
      tj["nodata"] = t.nodata;
      tj["cropland"] = t.cropland;
      tj["cropland_fraction"] = t.cropland_fraction;
      pixels += t.pixels;
      nodata += t.nodata;
      cropland += t.cropland;
    } else {
      tj["error"] = t.error;
      errors.push_back({{"tile_id", t.tile_id}, {"error", t.error}});
    }
    tiles.push_back(std::move(tj));
  }
  const std::size_t valid = pixels - nodata;
  ordered_json j{{"threshold", report.threshold},
                 {"ok", report.ok()},
                 {"pixels", pixels},
                 {"nodata", nodata},
                 {"cropland", cropland},
                 {"cropland_fraction",
                  valid == 0 ? 0.0 : static_cast<double>(cropland) / static_cast<double>(valid)},
                 {"tiles", std::move(tiles)},
                 {"errors", std::move(errors)}};
  return j.dump(2) + "\n";
}

}  // namespace cropmap::mapping
