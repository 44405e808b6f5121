#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cropmap/cli/config.hpp"
#include "cropmap/data/schema.hpp"
#include "cropmap/dataset/normalization.hpp"
#include "cropmap/models/trainer.hpp"

namespace cropmap::cli {

/// Split assignment of one label table. `rows` are label-table row indices
/// (0-based, header excluded) and `tags` the split of each.
struct SourceSplit {
  std::string name;
  std::vector<std::size_t> rows;
  std::vector<data::SplitTag> tags;

  std::vector<std::size_t> rows_with(data::SplitTag tag) const;
};

struct SplitPlan {
  std::optional<SourceSplit> local;
  std::optional<SourceSplit> global;
};

/// Label-table rows of the crowd-sourced table that the configured subset
/// keeps.
std::vector<std::size_t> geowiki_rows(std::span<const data::LabeledPoint> points, const ExperimentConfig& config);

/// 50/25/25 spatial split of the local table and 80/20 split of the selected
/// crowd-sourced rows, both seeded from config.seed.
SplitPlan compute_split_plan(const ExperimentConfig& config);

/// splits_local.csv, splits_global.csv and the splits.json sidecar.
void write_split_plan(const SplitPlan& plan, const ExperimentConfig& config, const std::filesystem::path& dir);

/// Reads split files from `dir` when their sidecar matches the config.
std::optional<SplitPlan> read_split_plan(const ExperimentConfig& config, const std::filesystem::path& dir);

/// Existing split files under config.out, else freshly computed and written.
SplitPlan obtain_split_plan(const ExperimentConfig& config);

/// Labeled samples of every split, as loaded from the feature containers.
struct DataPools {
  data::Dataset train;
  data::Dataset validation;
  data::Dataset test;
  /// Normalization inputs: one train+validation pool per source used.
  std::vector<data::Dataset> stats_pools;
};

DataPools load_pools(const ExperimentConfig& config, const SplitPlan& plan);

/// Per-source statistics merged by sample count.
dataset::NormStats training_stats(const DataPools& pools);

std::vector<models::TrainingSample> to_training_samples(const data::Dataset& dataset,
                                                        const dataset::NormStats& stats,
                                                        std::span<const std::size_t> channels);

std::vector<int> labels_of(const data::Dataset& dataset);

}  // namespace cropmap::cli
