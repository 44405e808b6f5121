#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "cropmap/models/lstm.hpp"
#include "cropmap/models/loss.hpp"

namespace cropmap::models {

enum class LossWeighting { weighted, plain };

std::string_view to_string(LossWeighting w);
LossWeighting parse_loss_weighting(std::string_view text);

struct TrainConfig {
  double learning_rate = 1e-3;
  std::size_t batch_size = 64;
  std::size_t max_epochs = 100;
  std::size_t patience = 10;
  std::uint64_t seed = 0;
  LossWeighting loss_weighting = LossWeighting::weighted;
};

void validate_train_config(const TrainConfig& config);

/// A normalized sample: month-major 12 x input values.
struct TrainingSample {
  std::vector<double> features;
  int label = 0;
  bool is_local = true;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_f1 = 0.0;
};

struct TrainResult {
  MultiTaskModel model;
  std::vector<EpochRecord> history;
  /// Epoch whose parameters were kept; empty when no epoch ran.
  std::optional<std::size_t> best_epoch;
  /// Multi-headed batches that contained no local sample.
  std::size_t degenerate_batches = 0;
};

/// Class weights per head as used by train(): single-headed models pool all
/// labels into the local head; plain weighting returns {1, 1}.
struct HeadWeights {
  ClassWeights local;
  ClassWeights global;
};
HeadWeights head_weights(std::span<const TrainingSample> train, bool multi_headed,
                         LossWeighting weighting);

/// Loss of `model` over `samples` as one batch (no dropout), routing local
/// samples to the local head and the rest to the global head when
/// multi-headed.
double evaluate_loss(const MultiTaskModel& model, std::span<const TrainingSample> samples,
                     const HeadWeights& weights);

/// Per-sample probabilities from the head each sample is supervised by.
std::vector<double> routed_probabilities(const MultiTaskModel& model,
                                         std::span<const TrainingSample> samples);

/// Loss of one mini-batch recorded on `tape` (used by training and by the
/// gradient checks).
Var batch_loss(Tape& tape, const BoundParams& params, const ModelSpec& spec,
               std::span<const TrainingSample* const> batch, const HeadWeights& weights,
               const Tensor* dropout_mask);

/// Adam mini-batch training with per-epoch shuffling, early stopping on
/// validation loss and restoration of the best epoch's parameters.
TrainResult train(const ModelSpec& spec, std::span<const TrainingSample> train_set,
                  std::span<const TrainingSample> validation_set, const TrainConfig& config);

void write_history_csv(std::span<const EpochRecord> history, const std::filesystem::path& path);

}  // namespace cropmap::models
