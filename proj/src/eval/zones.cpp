#include "cropmap/eval/zones.hpp"

#include <string>

#include "cropmap/error.hpp"

namespace cropmap::eval {

std::vector<ZoneReport> evaluate_by_zone(std::span<const data::LabeledPoint> points,
                                         std::span<const double> scores, std::span<const int> labels,
                                         const dataset::RegionSet& zones, double threshold) {
  if (zones.empty()) throw InvalidArgument("evaluate_by_zone: empty zone set");
  if (points.size() != scores.size() || points.size() != labels.size()) {
    throw InvalidArgument("evaluate_by_zone: points, scores and labels differ in length");
  }
  const auto regions = zones.regions();
  const std::size_t unzoned = regions.size();
  std::vector<std::vector<double>> zone_scores(regions.size() + 1);
  std::vector<std::vector<int>> zone_labels(regions.size() + 1);

  for (std::size_t i = 0; i < points.size(); ++i) {
    const dataset::LatLon p{points[i].lat, points[i].lon};
    std::size_t zone = unzoned;
    for (std::size_t z = 0; z < regions.size(); ++z) {
      if (!regions[z].contains(p)) continue;
      if (zone != unzoned) {
        throw InvalidArgument("point " + std::to_string(i) + " lies in both '" + regions[zone].name +
                              "' and '" + regions[z].name + "'");
      }
      zone = z;
    }
    zone_scores[zone].push_back(scores[i]);
    zone_labels[zone].push_back(labels[i]);
  }

  std::vector<ZoneReport> out;
  for (std::size_t z = 0; z <= regions.size(); ++z) {
    if (z == unzoned && zone_scores[z].empty()) break;
    ZoneReport r;
    r.name = z == unzoned ? std::string(kUnzoned) : regions[z].name;
    r.count = zone_scores[z].size();
    r.confusion = confusion_at_threshold(zone_scores[z], zone_labels[z], threshold);
    if (r.count > 0) r.metrics = metrics_from_confusion(r.confusion);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace cropmap::eval
