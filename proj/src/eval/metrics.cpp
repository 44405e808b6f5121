#include "cropmap/eval/metrics.hpp"

#include <cmath>
#include <string>

#include "cropmap/error.hpp"

namespace cropmap::eval {

namespace {

void check_label(int label, std::size_t i) {
  if (label != 0 && label != 1) {
    throw InvalidArgument("label " + std::to_string(label) + " at index " + std::to_string(i) +
                          " is not 0 or 1");
  }
}

void add(Confusion& c, bool predicted, bool truth) {
  if (predicted) {
    ++(truth ? c.tp : c.fp);
  } else {
    ++(truth ? c.fn : c.tn);
  }
}

double ratio(std::size_t num, std::size_t den, bool& defined) {
  defined = den != 0;
  return defined ? static_cast<double>(num) / static_cast<double>(den) : 0.0;
}

}  // namespace

Confusion confusion_at_threshold(std::span<const double> scores, std::span<const int> labels,
                                 double threshold) {
  if (scores.size() != labels.size()) {
    throw InvalidArgument("confusion: " + std::to_string(scores.size()) + " scores for " +
                          std::to_string(labels.size()) + " labels");
  }
  if (!std::isfinite(threshold)) throw InvalidArgument("confusion: non-finite threshold");
  Confusion c;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    check_label(labels[i], i);
    if (!(scores[i] >= 0.0 && scores[i] <= 1.0)) {
      throw InvalidArgument("confusion: score at index " + std::to_string(i) + " is outside [0, 1]");
    }
    add(c, scores[i] >= threshold, labels[i] == 1);
  }
  return c;
}

Confusion confusion_from_predictions(std::span<const int> predictions, std::span<const int> labels) {
  if (predictions.size() != labels.size()) {
    throw InvalidArgument("confusion: " + std::to_string(predictions.size()) + " predictions for " +
                          std::to_string(labels.size()) + " labels");
  }
  Confusion c;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    check_label(labels[i], i);
    check_label(predictions[i], i);
    add(c, predictions[i] == 1, labels[i] == 1);
  }
  return c;
}

Metrics metrics_from_confusion(const Confusion& c) {
  if (c.total() == 0) throw InvalidArgument("metrics: empty confusion matrix");
  Metrics m;
  m.precision = ratio(c.tp, c.tp + c.fp, m.precision_defined);
  m.recall = ratio(c.tp, c.tp + c.fn, m.recall_defined);
  m.f1 = ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn, m.f1_defined);
  m.fpr = ratio(c.fp, c.fp + c.tn, m.fpr_defined);
  bool defined = true;
  m.accuracy = ratio(c.tp + c.tn, c.total(), defined);
  return m;
}

}  // namespace cropmap::eval
