#include "cropmap/models/loss.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cropmap/error.hpp"

namespace cropmap::models {

using numeric::kProbabilityEpsilon;

ClassWeights class_weights_from_labels(std::span<const int> labels) {
  const auto n = static_cast<double>(labels.size());
  const auto pos = static_cast<double>(std::count(labels.begin(), labels.end(), 1));
  const double neg = n - pos;
  if (pos == 0.0 || neg == 0.0) {
    throw InvalidArgument("class weights need both classes; got " + std::to_string(static_cast<long>(pos)) +
                          " cropland of " + std::to_string(labels.size()));
  }
  return {n / pos, n / neg};
}

double weighted_bce(std::span<const double> probs, std::span<const int> labels, ClassWeights w) {
  if (probs.size() != labels.size()) throw InvalidArgument("weighted_bce: length mismatch");
  if (probs.empty()) return 0.0;
  // Same accumulation order as the tape primitive so both agree bit-for-bit.
  double total = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double y = labels[i];
    const double weight = labels[i] == 1 ? w.positive : w.negative;
    const double q = std::clamp(probs[i], kProbabilityEpsilon, 1.0 - kProbabilityEpsilon);
    total += weight * (y * std::log(q) + (1.0 - y) * std::log(1.0 - q));
  }
  return -total / static_cast<double>(probs.size());
}

double global_to_local_ratio(std::size_t n_local, std::size_t n_global) {
  return static_cast<double>(n_global) / static_cast<double>(std::max<std::size_t>(n_local, 1));
}

double multi_task_loss(std::span<const double> local_probs, std::span<const int> local_labels,
                       std::span<const double> global_probs, std::span<const int> global_labels,
                       double alpha, ClassWeights local_weights, ClassWeights global_weights) {
  if (!(alpha > 0.0)) throw InvalidArgument("multi_task_loss: alpha must be > 0");
  const double local = weighted_bce(local_probs, local_labels, local_weights);
  if (global_probs.empty()) return local;
  const double ratio = global_to_local_ratio(local_probs.size(), global_probs.size());
  const double global = weighted_bce(global_probs, global_labels, global_weights);
  if (local_probs.empty()) return global * (ratio / alpha);
  return global * (ratio / alpha) + local;
}

numeric::Var weighted_bce(numeric::Tape& tape, numeric::Var probs, std::span<const int> labels,
                          std::span<const char> include, ClassWeights w) {
  const std::size_t n = labels.size();
  if (include.size() != n) throw InvalidArgument("weighted_bce: include mask length mismatch");
  numeric::Tensor targets({n, 1});
  numeric::Tensor weights({n, 1});
  std::size_t count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    targets[i] = labels[i];
    if (!include[i]) continue;
    weights[i] = labels[i] == 1 ? w.positive : w.negative;
    ++count;
  }
  return tape.bce(probs, targets, weights, static_cast<double>(count));
}

}  // namespace cropmap::models
