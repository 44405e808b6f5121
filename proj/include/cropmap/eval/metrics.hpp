#pragma once

#include <cstddef>
#include <span>

namespace cropmap::eval {

struct Confusion {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;

  std::size_t total() const { return tp + fp + fn + tn; }
  std::size_t positives() const { return tp + fn; }
  std::size_t negatives() const { return fp + tn; }
  friend bool operator==(const Confusion&, const Confusion&) = default;
};

/// Predicts cropland iff score >= threshold.
Confusion confusion_at_threshold(std::span<const double> scores, std::span<const int> labels,
                                 double threshold = 0.5);

/// Same counts from hard 0/1 predictions.
Confusion confusion_from_predictions(std::span<const int> predictions, std::span<const int> labels);

/// Ratios with a zero denominator are reported as 0 and flagged undefined.
struct Metrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double accuracy = 0.0;
  double fpr = 0.0;
  bool precision_defined = true;
  bool recall_defined = true;
  bool f1_defined = true;
  bool fpr_defined = true;
};

/// f1 is computed as 2TP / (2TP + FP + FN), which equals the harmonic mean
/// of precision and recall whenever both are nonzero.
Metrics metrics_from_confusion(const Confusion& c);

}  // namespace cropmap::eval
