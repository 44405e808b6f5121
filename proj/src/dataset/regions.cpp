#include "cropmap/dataset/regions.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cropmap/error.hpp"

namespace cropmap::dataset {

namespace {

using nlohmann::json;

// x = lon, y = lat throughout.
bool on_segment(LatLon p, LatLon a, LatLon b) {
  const double cross = (b.lon - a.lon) * (p.lat - a.lat) - (b.lat - a.lat) * (p.lon - a.lon);
  const double scale = std::max({std::abs(b.lon - a.lon), std::abs(b.lat - a.lat), 1.0});
  if (std::abs(cross) > 1e-12 * scale) return false;
  return p.lon >= std::min(a.lon, b.lon) && p.lon <= std::max(a.lon, b.lon) &&
         p.lat >= std::min(a.lat, b.lat) && p.lat <= std::max(a.lat, b.lat);
}

bool polygon_contains(const Polygon& poly, LatLon p) {
  bool inside = false;
  for (const Ring& ring : poly.rings) {
    for (std::size_t i = 0, j = ring.size() - 1; i < ring.size(); j = i++) {
      const LatLon a = ring[j];
      const LatLon b = ring[i];
      if (on_segment(p, a, b)) return true;
      if ((a.lat > p.lat) != (b.lat > p.lat)) {
        const double x = a.lon + (p.lat - a.lat) * (b.lon - a.lon) / (b.lat - a.lat);
        if (p.lon < x) inside = !inside;
      }
    }
  }
  return inside;
}

Ring parse_ring(const json& coords) {
  Ring ring;
  for (const auto& pos : coords) {
    if (!pos.is_array() || pos.size() < 2) throw FormatError("GeoJSON position must be [lon, lat]");
    ring.push_back({pos[1].get<double>(), pos[0].get<double>()});
  }
  return ring;
}

Polygon parse_polygon(const json& coords) {
  Polygon poly;
  for (const auto& ring : coords) poly.rings.push_back(parse_ring(ring));
  return poly;
}

json ring_to_json(const Ring& ring) {
  json out = json::array();
  for (const auto& v : ring) out.push_back({v.lon, v.lat});
  return out;
}

}  // namespace

bool Region::contains(LatLon p) const {
  return std::any_of(parts.begin(), parts.end(),
                     [&](const Polygon& poly) { return polygon_contains(poly, p); });
}

RegionSet::RegionSet(std::vector<Region> regions) : regions_(std::move(regions)) {
  for (const auto& r : regions_) validate_region(r);
}

const Region* RegionSet::find(std::string_view name) const {
  for (const auto& r : regions_)
    if (r.name == name) return &r;
  return nullptr;
}

RegionSet RegionSet::select(std::span<const std::string> names) const {
  std::vector<Region> out;
  for (const auto& n : names) {
    const Region* r = find(n);
    if (!r) throw InvalidArgument("region '" + n + "' not found in region set");
    out.push_back(*r);
  }
  return RegionSet(std::move(out));
}

bool RegionSet::contains(LatLon p) const { return region_of(p).has_value(); }

std::optional<std::size_t> RegionSet::region_of(LatLon p) const {
  for (std::size_t i = 0; i < regions_.size(); ++i)
    if (regions_[i].contains(p)) return i;
  return std::nullopt;
}

void validate_region(const Region& region) {
  if (region.parts.empty()) throw InvalidArgument("region '" + region.name + "' has no polygons");
  for (const auto& poly : region.parts) {
    if (poly.rings.empty()) throw InvalidArgument("region '" + region.name + "' has an empty polygon");
    for (const auto& ring : poly.rings) {
      if (ring.size() < 4) {
        throw InvalidArgument("region '" + region.name + "': ring needs at least 4 vertices");
      }
      if (ring.front().lat != ring.back().lat || ring.front().lon != ring.back().lon) {
        throw InvalidArgument("region '" + region.name + "': ring is not closed");
      }
    }
  }
}

RegionSet parse_regions_geojson(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(std::string("GeoJSON parse error: ") + e.what());
  }
  if (doc.value("type", "") != "FeatureCollection") {
    throw FormatError("GeoJSON root must be a FeatureCollection");
  }
  std::vector<Region> regions;
  try {
    for (const auto& feature : doc.at("features")) {
      Region region;
      const auto& props = feature.at("properties");
      if (!props.contains("name") || !props["name"].is_string()) {
        throw FormatError("GeoJSON feature without a string 'name' property");
      }
      region.name = props["name"].get<std::string>();
      const auto& geom = feature.at("geometry");
      const std::string type = geom.at("type").get<std::string>();
      if (type == "Polygon") {
        region.parts.push_back(parse_polygon(geom.at("coordinates")));
      } else if (type == "MultiPolygon") {
        for (const auto& p : geom.at("coordinates")) region.parts.push_back(parse_polygon(p));
      } else {
        throw FormatError("unsupported GeoJSON geometry '" + type + "' for region " + region.name);
      }
      regions.push_back(std::move(region));
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("GeoJSON structure error: ") + e.what());
  }
  try {
    return RegionSet(std::move(regions));
  } catch (const InvalidArgument& e) {
    throw FormatError(e.what());
  }
}

RegionSet read_regions_geojson(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open regions file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_regions_geojson(ss.str());
}

void write_regions_geojson(const RegionSet& regions, const std::filesystem::path& path) {
  json features = json::array();
  for (const auto& r : regions.regions()) {
    json polys = json::array();
    for (const auto& poly : r.parts) {
      json rings = json::array();
      for (const auto& ring : poly.rings) rings.push_back(ring_to_json(ring));
      polys.push_back(std::move(rings));
    }
    features.push_back({{"type", "Feature"},
                        {"properties", {{"name", r.name}}},
                        {"geometry", {{"type", "MultiPolygon"}, {"coordinates", polys}}}});
  }
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write regions file " + path.string());
  out << json{{"type", "FeatureCollection"}, {"features", features}}.dump(2) << '\n';
}

std::vector<std::size_t> indices_in_regions(std::span<const data::LabeledPoint> points,
                                            const RegionSet& regions) {
  if (regions.empty()) throw InvalidArgument("subset_by_region: empty region set");
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < points.size(); ++i)
    if (regions.contains({points[i].lat, points[i].lon})) out.push_back(i);
  return out;
}

std::vector<data::LabeledPoint> subset_by_region(std::span<const data::LabeledPoint> points,
                                                 const RegionSet& regions) {
  std::vector<data::LabeledPoint> out;
  for (std::size_t i : indices_in_regions(points, regions)) out.push_back(points[i]);
  return out;
}

}  // namespace cropmap::dataset
