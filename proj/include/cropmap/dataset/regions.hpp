#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cropmap/data/schema.hpp"
#include "cropmap/dataset/geo.hpp"

namespace cropmap::dataset {

/// Closed ring of (lat, lon) vertices; first vertex repeated at the end.
using Ring = std::vector<LatLon>;

/// Outer ring followed by optional holes.
struct Polygon {
  std::vector<Ring> rings;
};

struct Region {
  std::string name;
  std::vector<Polygon> parts;

  /// Even-odd test over every ring of every part; boundary points are inside.
  bool contains(LatLon p) const;
};

class RegionSet {
 public:
  RegionSet() = default;
  explicit RegionSet(std::vector<Region> regions);

  std::span<const Region> regions() const { return regions_; }
  bool empty() const { return regions_.empty(); }
  std::size_t size() const { return regions_.size(); }

  const Region* find(std::string_view name) const;
  /// Regions whose names are listed, in the given order. Throws on unknown names.
  RegionSet select(std::span<const std::string> names) const;
  bool contains(LatLon p) const;
  /// Index of the first region containing p.
  std::optional<std::size_t> region_of(LatLon p) const;

 private:
  std::vector<Region> regions_;
};

/// Validates ring closure and vertex counts; throws InvalidArgument.
void validate_region(const Region& region);

/// GeoJSON FeatureCollection of Polygon / MultiPolygon features with a
/// "name" property.
RegionSet read_regions_geojson(const std::filesystem::path& path);
RegionSet parse_regions_geojson(std::string_view text);
void write_regions_geojson(const RegionSet& regions, const std::filesystem::path& path);

/// Indices of points inside any region. Throws on an empty region set.
std::vector<std::size_t> indices_in_regions(std::span<const data::LabeledPoint> points,
                                            const RegionSet& regions);

std::vector<data::LabeledPoint> subset_by_region(std::span<const data::LabeledPoint> points,
                                                 const RegionSet& regions);

}  // namespace cropmap::dataset
