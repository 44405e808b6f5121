#include "cropmap/eval/roc.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "cropmap/error.hpp"

namespace cropmap::eval {

RocCurve roc_auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw InvalidArgument("roc_auc: length mismatch");
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) throw InvalidArgument("roc_auc: labels must be 0 or 1");
    if (!std::isfinite(scores[i])) throw InvalidArgument("roc_auc: non-finite score");
    n_pos += labels[i] == 1;
  }
  const std::size_t n_neg = labels.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) throw InvalidArgument("roc_auc: both classes are required");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  const double P = static_cast<double>(n_pos);
  const double N = static_cast<double>(n_neg);
  RocCurve curve;
  curve.points.push_back({scores[order.front()] + 1.0, 0.0, 0.0});

  // Twice the area in units of (one negative x one positive); every term is
  // an integer so the sum is exact.
  double doubled_area = 0.0;
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < order.size();) {
    const double thr = scores[order[i]];
    const std::size_t tp_prev = tp, fp_prev = fp;
    for (; i < order.size() && scores[order[i]] == thr; ++i) ++(labels[order[i]] == 1 ? tp : fp);
    doubled_area += static_cast<double>(fp - fp_prev) * static_cast<double>(tp + tp_prev);
    curve.points.push_back({thr, static_cast<double>(fp) / N, static_cast<double>(tp) / P});
  }
  curve.auc = doubled_area / (2.0 * P * N);
  return curve;
}

}  // namespace cropmap::eval
