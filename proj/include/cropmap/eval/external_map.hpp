#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cropmap/data/schema.hpp"
#include "cropmap/eval/report.hpp"

namespace cropmap::eval {

inline constexpr double kCoordinateTolerance = 1e-6;

/// Scores a land-cover product from the class sampled at each point:
/// `positive_class` counts as cropland, anything else as not. No AUC.
EvalReport compare_external_map(std::span<const std::string> point_classes, std::span<const int> labels,
                                std::string_view positive_class = "crops");

struct ExternalSample {
  double lat = 0.0;
  double lon = 0.0;
  std::string class_name;
};

/// CSV with columns lat, lon, class_name.
std::vector<ExternalSample> read_external_samples(const std::filesystem::path& path);

/// Class of the sample within `tolerance` degrees (lat and lon) of each
/// point. Throws when a point has no sample.
std::vector<std::string> align_external_classes(std::span<const data::LabeledPoint> points,
                                                std::span<const ExternalSample> samples,
                                                double tolerance = kCoordinateTolerance);

}  // namespace cropmap::eval
