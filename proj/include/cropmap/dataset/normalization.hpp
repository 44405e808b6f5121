#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "cropmap/data/schema.hpp"

namespace cropmap::dataset {

/// Lower bound applied to every per-channel standard deviation.
inline constexpr double kStdFloor = 1e-6;

struct NormStats {
  std::vector<std::string> channel_names;
  std::vector<double> means;
  std::vector<double> stds;
  /// Number of samples (not values) the statistics were computed from.
  std::size_t count = 0;

  std::size_t channel_index(const std::string& name) const;
  friend bool operator==(const NormStats&, const NormStats&) = default;
};

/// Per-channel mean and population std pooled over every sample and month,
/// skipping masked entries. Callers pass the train+validation pool.
NormStats compute_norm_stats(const data::Dataset& dataset);

/// Count-weighted average of per-dataset means and of per-dataset stds.
/// The std combination is an average of stds, not a pooled variance.
NormStats merge_norm_stats(std::span<const NormStats> stats);

/// z-scores `channels` of the series (month-major, 12 x channels.size()).
/// Masked entries become 0.
std::vector<double> apply_normalization(const data::PixelTimeSeries& series, const NormStats& stats,
                                        std::span<const std::size_t> channels);

/// Inverse of apply_normalization for unmasked values.
std::vector<double> denormalize(std::span<const double> normalized, const NormStats& stats,
                                std::span<const std::size_t> channels);

void write_norm_stats(const NormStats& stats, const std::filesystem::path& path);
NormStats read_norm_stats(const std::filesystem::path& path);

}  // namespace cropmap::dataset
