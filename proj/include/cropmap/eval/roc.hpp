#pragma once

#include <span>
#include <vector>

namespace cropmap::eval {

struct RocPoint {
  double threshold = 0.0;
  double fpr = 0.0;
  double tpr = 0.0;
};

struct RocCurve {
  /// From (0, 0) at a sentinel threshold above every score to (1, 1).
  std::vector<RocPoint> points;
  double auc = 0.0;
};

/// One curve point per distinct score (ties form a single step); AUC by the
/// trapezoidal rule. Requires both classes.
RocCurve roc_auc(std::span<const double> scores, std::span<const int> labels);

}  // namespace cropmap::eval
