#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cropmap/eval/metrics.hpp"
#include "cropmap/eval/roc.hpp"

namespace cropmap::eval {

struct ZoneReport {
  std::string name;
  std::size_t count = 0;
  Confusion confusion;
  /// Empty when no point fell in the zone.
  std::optional<Metrics> metrics;
};

struct EvalReport {
  double threshold = 0.5;
  Confusion confusion;
  Metrics metrics;
  std::optional<double> auc;
  std::vector<RocPoint> roc;
  std::vector<ZoneReport> zones;
};

/// Confusion and metrics at `threshold`; AUC and ROC points when both classes
/// are present.
EvalReport evaluate_scores(std::span<const double> scores, std::span<const int> labels,
                           double threshold = 0.5);

std::string report_to_json(const EvalReport& report);
void write_report_json(const EvalReport& report, const std::filesystem::path& path);
/// Columns: threshold, fpr, tpr.
void write_roc_csv(std::span<const RocPoint> points, const std::filesystem::path& path);

}  // namespace cropmap::eval
