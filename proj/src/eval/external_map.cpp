#include "cropmap/eval/external_map.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include "cropmap/data/csv.hpp"
#include "cropmap/error.hpp"

namespace cropmap::eval {

EvalReport compare_external_map(std::span<const std::string> point_classes, std::span<const int> labels,
                                std::string_view positive_class) {
  if (point_classes.size() != labels.size()) {
    throw InvalidArgument("compare_external_map: " + std::to_string(point_classes.size()) +
                          " classes for " + std::to_string(labels.size()) + " labels");
  }
  std::vector<int> predictions;
  predictions.reserve(point_classes.size());
  for (const auto& c : point_classes) predictions.push_back(c == positive_class ? 1 : 0);
  EvalReport r;
  r.confusion = confusion_from_predictions(predictions, labels);
  r.metrics = metrics_from_confusion(r.confusion);
  return r;
}

std::vector<ExternalSample> read_external_samples(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open external map samples " + path.string());
  std::string line;
  if (!data::read_csv_line(in, line)) throw FormatError(path.string() + " is empty");
  std::map<std::string, std::size_t, std::less<>> columns;
  {
    auto header = data::split_csv_line(line);
    if (!header.empty() && header[0].rfind("\xEF\xBB\xBF", 0) == 0) header[0].erase(0, 3);
    for (std::size_t i = 0; i < header.size(); ++i) columns[std::string(data::trim(header[i]))] = i;
  }
  for (const char* required : {"lat", "lon", "class_name"}) {
    if (!columns.contains(required)) {
      throw FormatError(path.string() + ": missing required column '" + required + "'");
    }
  }
  std::vector<ExternalSample> out;
  std::size_t row = 1;
  while (data::read_csv_line(in, line)) {
    ++row;
    const auto fields = data::split_csv_line(line);
    auto cell = [&](const char* name) {
      const std::size_t idx = columns.find(name)->second;
      if (idx >= fields.size()) {
        throw FormatError(path.string() + " row " + std::to_string(row) + ": missing field '" + name + "'");
      }
      return data::trim(fields[idx]);
    };
    const auto lat = data::parse_double(cell("lat"));
    const auto lon = data::parse_double(cell("lon"));
    if (!lat || !lon) throw FormatError(path.string() + " row " + std::to_string(row) + ": bad coordinate");
    out.push_back({*lat, *lon, std::string(cell("class_name"))});
  }
  return out;
}

std::vector<std::string> align_external_classes(std::span<const data::LabeledPoint> points,
                                                std::span<const ExternalSample> samples, double tolerance) {
  std::vector<std::size_t> by_lat(samples.size());
  for (std::size_t i = 0; i < by_lat.size(); ++i) by_lat[i] = i;
  std::sort(by_lat.begin(), by_lat.end(),
            [&](std::size_t a, std::size_t b) { return samples[a].lat < samples[b].lat; });

  std::vector<std::string> out;
  out.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& p = points[i];
    auto it = std::lower_bound(by_lat.begin(), by_lat.end(), p.lat - tolerance,
                               [&](std::size_t s, double v) { return samples[s].lat < v; });
    const ExternalSample* match = nullptr;
    for (; it != by_lat.end() && samples[*it].lat <= p.lat + tolerance; ++it) {
      if (std::abs(samples[*it].lon - p.lon) <= tolerance) {
        match = &samples[*it];
        break;
      }
    }
    if (!match) {
      throw InvalidArgument("no external map sample within " + data::format_double(tolerance) +
                            " degrees of point " + std::to_string(i) + " (" + data::format_double(p.lat) +
                            ", " + data::format_double(p.lon) + ")");
    }
    out.push_back(match->class_name);
  }
  return out;
}

}  // namespace cropmap::eval
