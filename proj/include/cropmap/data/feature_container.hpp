#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "cropmap/data/schema.hpp"

namespace cropmap::data {

/// Binary feature container, little-endian:
///
///   "CLRN" | u16 version=1 | u32 n_samples | u16 T=12 | u16 C=18
///   C x (u16 byte length, UTF-8 channel name)
///   n_samples x (T*C float32 month-major values, 27 mask bytes)
///
/// Mask bit k (k = month*C + channel) lives in byte k/8 at bit k%8 (LSB
/// first); a set bit marks the value missing.
inline constexpr std::uint16_t kContainerVersion = 1;
inline constexpr std::size_t kMaskBytes = (kSeriesValues + 7) / 8;

std::vector<PixelTimeSeries> read_feature_series(const std::filesystem::path& path);

/// Reads the container and joins it to `labels` by position.
Dataset read_feature_container(const std::filesystem::path& path,
                               std::vector<LabeledPoint> labels);

void write_feature_container(std::span<const PixelTimeSeries> series,
                             const std::filesystem::path& path);
void write_feature_container(const Dataset& dataset, const std::filesystem::path& path);

}  // namespace cropmap::data
