#include "cropmap/data/schema.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

#include "cropmap/error.hpp"

namespace cropmap::data {

FeatureSchema::FeatureSchema()
    : channels_{{
          {"VV", ChannelGroup::sar, false, false},
          {"VH", ChannelGroup::sar, false, false},
          {"B2", ChannelGroup::multispectral, false, true},
          {"B3", ChannelGroup::multispectral, false, true},
          {"B4", ChannelGroup::multispectral, false, true},
          {"B8", ChannelGroup::multispectral, false, true},
          {"B5", ChannelGroup::multispectral, false, true},
          {"B6", ChannelGroup::multispectral, false, true},
          {"B7", ChannelGroup::multispectral, false, true},
          {"B8A", ChannelGroup::multispectral, false, true},
          {"B9", ChannelGroup::multispectral, false, true},
          {"B11", ChannelGroup::multispectral, false, true},
          {"B12", ChannelGroup::multispectral, false, true},
          {"NDVI", ChannelGroup::multispectral, false, true},
          {"precip_monthly", ChannelGroup::climate, false, false},
          {"temp_2m_monthly", ChannelGroup::climate, false, false},
          {"elevation", ChannelGroup::topological, true, false},
          {"slope", ChannelGroup::topological, true, false},
      }} {}

const FeatureSchema& FeatureSchema::standard() {
  static const FeatureSchema schema;
  return schema;
}

std::optional<std::size_t> FeatureSchema::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < channels_.size(); ++i)
    if (channels_[i].name == name) return i;
  return std::nullopt;
}

std::vector<std::string> FeatureSchema::names() const {
  std::vector<std::string> out;
  out.reserve(channels_.size());
  for (const auto& c : channels_) out.emplace_back(c.name);
  return out;
}

std::size_t FeatureSchema::ndvi_index() const { return *index_of("NDVI"); }

std::string_view to_string(FeatureSet set) {
  return set == FeatureSet::full ? "full" : "s2_ndvi_only";
}

FeatureSet parse_feature_set(std::string_view text) {
  if (text == "full") return FeatureSet::full;
  if (text == "s2_ndvi_only") return FeatureSet::s2_ndvi_only;
  throw InvalidArgument("unknown feature_set '" + std::string(text) + "'");
}

std::vector<std::size_t> select_channels(FeatureSet set) {
  const auto& schema = FeatureSchema::standard();
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < schema.size(); ++i)
    if (set == FeatureSet::full || schema[i].from_sentinel2) out.push_back(i);
  return out;
}

void PixelTimeSeries::set(std::size_t month, std::size_t channel, float v) {
  values[index(month, channel)] = v;
  missing.reset(index(month, channel));
}

void PixelTimeSeries::set_missing(std::size_t month, std::size_t channel) {
  values[index(month, channel)] = std::numeric_limits<float>::quiet_NaN();
  missing.set(index(month, channel));
}

bool PixelTimeSeries::channel_fully_missing(std::size_t channel) const {
  for (std::size_t t = 0; t < kMonths; ++t)
    if (!is_missing(t, channel)) return false;
  return true;
}

bool operator==(const PixelTimeSeries& a, const PixelTimeSeries& b) {
  // Bitwise on values so NaN sentinels compare equal.
  return a.missing == b.missing &&
         std::memcmp(a.values.data(), b.values.data(), sizeof(float) * kSeriesValues) == 0;
}

void validate_series(const PixelTimeSeries& s) {
  const auto& schema = FeatureSchema::standard();
  const std::size_t ndvi = schema.ndvi_index();
  for (std::size_t c = 0; c < kChannels; ++c) {
    std::optional<float> static_value;
    for (std::size_t t = 0; t < kMonths; ++t) {
      if (s.is_missing(t, c)) continue;
      const float v = s.at(t, c);
      if (!std::isfinite(v)) {
        throw InvalidArgument("non-finite unmasked value at month " + std::to_string(t) +
                              ", channel " + std::string(schema[c].name));
      }
      if (c == ndvi && (v < -1.0f || v > 1.0f)) {
        throw InvalidArgument("NDVI out of [-1, 1] at month " + std::to_string(t));
      }
      if (schema[c].is_static) {
        if (static_value && *static_value != v) {
          throw InvalidArgument("static channel " + std::string(schema[c].name) +
                                " varies over time");
        }
        static_value = v;
      }
    }
  }
}

int binarize_probability(double p) { return p >= 0.5 ? 1 : 0; }

std::string_view to_string(SplitTag tag) {
  switch (tag) {
    case SplitTag::train: return "train";
    case SplitTag::validation: return "validation";
    case SplitTag::test: return "test";
    case SplitTag::unsplit: return "unsplit";
  }
  return "unsplit";
}

SplitTag parse_split_tag(std::string_view text) {
  if (text == "train") return SplitTag::train;
  if (text == "validation") return SplitTag::validation;
  if (text == "test") return SplitTag::test;
  if (text == "unsplit") return SplitTag::unsplit;
  throw FormatError("unknown split name '" + std::string(text) + "'");
}

Dataset Dataset::subset(std::span<const std::size_t> indices, SplitTag tag) const {
  Dataset out;
  out.split = tag;
  out.points.reserve(indices.size());
  out.series.reserve(indices.size());
  for (std::size_t i : indices) {
    out.points.push_back(points.at(i));
    out.series.push_back(series.at(i));
  }
  return out;
}

Dataset make_dataset(std::vector<LabeledPoint> points, std::vector<PixelTimeSeries> series) {
  if (points.size() != series.size()) {
    throw FormatError("label table has " + std::to_string(points.size()) +
                      " rows but feature container has " + std::to_string(series.size()) +
                      " samples");
  }
  Dataset ds;
  ds.points = std::move(points);
  ds.series = std::move(series);
  return ds;
}

Dataset concatenate(std::span<const Dataset> parts) {
  Dataset out;
  if (!parts.empty()) out.split = parts.front().split;
  for (const auto& p : parts) {
    out.points.insert(out.points.end(), p.points.begin(), p.points.end());
    out.series.insert(out.series.end(), p.series.begin(), p.series.end());
  }
  return out;
}

}  // namespace cropmap::data
