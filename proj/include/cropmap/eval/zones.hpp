#pragma once

#include <span>
#include <vector>

#include "cropmap/data/schema.hpp"
#include "cropmap/dataset/regions.hpp"
#include "cropmap/eval/report.hpp"

namespace cropmap::eval {

inline constexpr const char* kUnzoned = "unzoned";

/// One report per zone in RegionSet order, followed by "unzoned" when some
/// points fall outside every zone. A point inside two zones is an error.
std::vector<ZoneReport> evaluate_by_zone(std::span<const data::LabeledPoint> points,
                                         std::span<const double> scores, std::span<const int> labels,
                                         const dataset::RegionSet& zones, double threshold = 0.5);

}  // namespace cropmap::eval
