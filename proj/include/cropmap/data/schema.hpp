#pragma once

#include <array>
#include <bitset>
#include <chrono>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cropmap::data {

inline constexpr std::size_t kMonths = 12;
inline constexpr std::size_t kChannels = 18;
inline constexpr std::size_t kSeriesValues = kMonths * kChannels;

enum class ChannelGroup { sar, multispectral, climate, topological };

struct ChannelInfo {
  std::string_view name;
  ChannelGroup group;
  bool is_static;
  bool from_sentinel2;
};

/// The fixed 18-channel feature layout. Channel order is part of the
/// container and model formats.
class FeatureSchema {
 public:
  static const FeatureSchema& standard();

  std::span<const ChannelInfo> channels() const { return channels_; }
  std::size_t size() const { return channels_.size(); }
  const ChannelInfo& operator[](std::size_t i) const { return channels_[i]; }
  std::optional<std::size_t> index_of(std::string_view name) const;
  std::vector<std::string> names() const;
  std::size_t ndvi_index() const;

 private:
  FeatureSchema();
  std::array<ChannelInfo, kChannels> channels_;
};

enum class FeatureSet { full, s2_ndvi_only };

std::string_view to_string(FeatureSet set);
FeatureSet parse_feature_set(std::string_view text);

/// Indices into the standard schema that a model consumes, in schema order.
std::vector<std::size_t> select_channels(FeatureSet set);

/// 12 months x 18 channels, chronological (oldest month first), month-major.
/// Missing entries hold a quiet NaN; the mask is authoritative.
struct PixelTimeSeries {
  std::array<float, kSeriesValues> values{};
  std::bitset<kSeriesValues> missing;

  static constexpr std::size_t index(std::size_t month, std::size_t channel) {
    return month * kChannels + channel;
  }
  float at(std::size_t month, std::size_t channel) const { return values[index(month, channel)]; }
  bool is_missing(std::size_t month, std::size_t channel) const {
    return missing[index(month, channel)];
  }
  void set(std::size_t month, std::size_t channel, float v);
  void set_missing(std::size_t month, std::size_t channel);
  /// True when every month of `channel` is masked.
  bool channel_fully_missing(std::size_t channel) const;

  friend bool operator==(const PixelTimeSeries&, const PixelTimeSeries&);
};

/// Checks finiteness of unmasked values, NDVI range and constant static
/// channels. Throws InvalidArgument naming the first violation.
void validate_series(const PixelTimeSeries& series);

struct LabeledPoint {
  double lat = 0.0;
  double lon = 0.0;
  std::chrono::year_month_day date{};
  int label = 0;
  std::optional<double> source_probability;
  std::string dataset_id;
  bool is_local = false;
};

/// Hard label from an annotator probability: cropland iff p >= 0.5.
int binarize_probability(double p);

enum class SplitTag { train, validation, test, unsplit };

std::string_view to_string(SplitTag tag);
SplitTag parse_split_tag(std::string_view text);

struct Dataset {
  std::vector<LabeledPoint> points;
  std::vector<PixelTimeSeries> series;
  SplitTag split = SplitTag::unsplit;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  /// Returns the samples at `indices` (in that order) tagged `tag`.
  Dataset subset(std::span<const std::size_t> indices, SplitTag tag) const;
};

/// Joins labels and features by position; throws on count mismatch.
Dataset make_dataset(std::vector<LabeledPoint> points, std::vector<PixelTimeSeries> series);

/// Concatenates datasets (split tag of the first is kept).
Dataset concatenate(std::span<const Dataset> parts);

}  // namespace cropmap::data
