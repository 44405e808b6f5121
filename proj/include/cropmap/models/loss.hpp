#pragma once

#include <span>

#include "cropmap/numeric/tape.hpp"

namespace cropmap::models {

/// Per-class multipliers for the BCE terms: `positive` scales cropland
/// samples, `negative` the rest.
struct ClassWeights {
  double positive = 1.0;
  double negative = 1.0;
};

/// positive = n / n_pos, negative = n / n_neg. Throws if a class is absent.
ClassWeights class_weights_from_labels(std::span<const int> labels);

/// Mean over the batch of -(w1 y log p + w0 (1-y) log(1-p)), p clamped to
/// [1e-7, 1 - 1e-7]. An empty batch gives 0.
double weighted_bce(std::span<const double> probs, std::span<const int> labels, ClassWeights w);

/// (W / alpha) * L_global + L_local with W = n_global / n_local.
/// Without global samples this returns L_local unchanged; without local
/// samples the local term is 0 and W = n_global.
double multi_task_loss(std::span<const double> local_probs, std::span<const int> local_labels,
                       std::span<const double> global_probs, std::span<const int> global_labels,
                       double alpha, ClassWeights local_weights, ClassWeights global_weights);

/// Ratio W used by multi_task_loss.
double global_to_local_ratio(std::size_t n_local, std::size_t n_global);

/// Tape form of weighted_bce over the rows of `probs` selected by `include`.
numeric::Var weighted_bce(numeric::Tape& tape, numeric::Var probs, std::span<const int> labels,
                          std::span<const char> include, ClassWeights w);

}  // namespace cropmap::models
