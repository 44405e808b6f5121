#include "cropmap/dataset/normalization.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "cropmap/error.hpp"

namespace cropmap::dataset {

using data::kChannels;
using data::kMonths;
using nlohmann::json;

std::size_t NormStats::channel_index(const std::string& name) const {
  const auto it = std::find(channel_names.begin(), channel_names.end(), name);
  if (it == channel_names.end()) throw InvalidArgument("normalization stats lack channel " + name);
  return static_cast<std::size_t>(it - channel_names.begin());
}

NormStats compute_norm_stats(const data::Dataset& dataset) {
  if (dataset.empty()) throw InvalidArgument("compute_norm_stats: empty dataset");
  const auto& schema = data::FeatureSchema::standard();
  NormStats out;
  out.channel_names = schema.names();
  out.means.assign(kChannels, 0.0);
  out.stds.assign(kChannels, 0.0);
  out.count = dataset.size();

  std::vector<std::size_t> n(kChannels, 0);
  for (const auto& s : dataset.series)
    for (std::size_t t = 0; t < kMonths; ++t)
      for (std::size_t c = 0; c < kChannels; ++c)
        if (!s.is_missing(t, c)) {
          out.means[c] += s.at(t, c);
          ++n[c];
        }
  for (std::size_t c = 0; c < kChannels; ++c) {
    if (n[c] == 0) {
      throw InvalidArgument("compute_norm_stats: channel " + std::string(schema[c].name) +
                            " has no unmasked values");
    }
    out.means[c] /= static_cast<double>(n[c]);
  }
  for (const auto& s : dataset.series)
    for (std::size_t t = 0; t < kMonths; ++t)
      for (std::size_t c = 0; c < kChannels; ++c)
        if (!s.is_missing(t, c)) {
          const double d = s.at(t, c) - out.means[c];
          out.stds[c] += d * d;
        }
  for (std::size_t c = 0; c < kChannels; ++c)
    out.stds[c] = std::max(kStdFloor, std::sqrt(out.stds[c] / static_cast<double>(n[c])));
  return out;
}

NormStats merge_norm_stats(std::span<const NormStats> stats) {
  if (stats.empty()) throw InvalidArgument("merge_norm_stats: no statistics to merge");
  std::size_t total = 0;
  for (const auto& s : stats) {
    if (s.channel_names != stats.front().channel_names) {
      throw InvalidArgument("merge_norm_stats: channel lists differ");
    }
    total += s.count;
  }
  if (total == 0) throw InvalidArgument("merge_norm_stats: zero total count");
  if (stats.size() == 1) return stats.front();

  // Offsets from the first entry, so identical inputs merge to themselves
  // exactly.
  const NormStats& base = stats.front();
  NormStats out;
  out.channel_names = base.channel_names;
  const std::size_t channels = out.channel_names.size();
  std::vector<double> mean_shift(channels, 0.0), std_shift(channels, 0.0);
  out.count = total;
  for (const auto& s : stats) {
    const double n = static_cast<double>(s.count);
    for (std::size_t c = 0; c < channels; ++c) {
      mean_shift[c] += n * (s.means[c] - base.means[c]);
      std_shift[c] += n * (s.stds[c] - base.stds[c]);
    }
  }
  out.means.resize(channels);
  out.stds.resize(channels);
  for (std::size_t c = 0; c < channels; ++c) {
    out.means[c] = base.means[c] + mean_shift[c] / static_cast<double>(total);
    out.stds[c] = std::max(kStdFloor, base.stds[c] + std_shift[c] / static_cast<double>(total));
  }
  return out;
}

namespace {

std::vector<std::size_t> stats_columns(const NormStats& stats, std::span<const std::size_t> channels) {
  const auto& schema = data::FeatureSchema::standard();
  std::vector<std::size_t> cols;
  cols.reserve(channels.size());
  for (std::size_t c : channels) {
    if (c >= kChannels) throw InvalidArgument("channel index out of range");
    cols.push_back(stats.channel_index(std::string(schema[c].name)));
  }
  return cols;
}

}  // namespace

std::vector<double> apply_normalization(const data::PixelTimeSeries& series, const NormStats& stats,
                                        std::span<const std::size_t> channels) {
  const auto cols = stats_columns(stats, channels);
  const std::size_t width = channels.size();
  std::vector<double> out(kMonths * width, 0.0);
  for (std::size_t t = 0; t < kMonths; ++t)
    for (std::size_t j = 0; j < width; ++j) {
      const std::size_t c = channels[j];
      if (series.is_missing(t, c)) continue;
      out[t * width + j] = (series.at(t, c) - stats.means[cols[j]]) / stats.stds[cols[j]];
    }
  return out;
}

std::vector<double> denormalize(std::span<const double> normalized, const NormStats& stats,
                                std::span<const std::size_t> channels) {
  const auto cols = stats_columns(stats, channels);
  const std::size_t width = channels.size();
  if (normalized.size() != kMonths * width) throw InvalidArgument("denormalize: size mismatch");
  std::vector<double> out(normalized.size());
  for (std::size_t t = 0; t < kMonths; ++t)
    for (std::size_t j = 0; j < width; ++j)
      out[t * width + j] = normalized[t * width + j] * stats.stds[cols[j]] + stats.means[cols[j]];
  return out;
}

void write_norm_stats(const NormStats& stats, const std::filesystem::path& path) {
  json j{{"channel_names", stats.channel_names},
         {"means", stats.means},
         {"stds", stats.stds},
         {"count", stats.count}};
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write normalization stats " + path.string());
  out << j.dump(2) << '\n';
}

NormStats read_norm_stats(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open normalization stats " + path.string());
  try {
    const json j = json::parse(in);
    NormStats s;
    s.channel_names = j.at("channel_names").get<std::vector<std::string>>();
    s.means = j.at("means").get<std::vector<double>>();
    s.stds = j.at("stds").get<std::vector<double>>();
    s.count = j.at("count").get<std::size_t>();
    if (s.means.size() != s.channel_names.size() || s.stds.size() != s.channel_names.size()) {
      throw FormatError(path.string() + ": means/stds length differs from channel_names");
    }
    for (double sd : s.stds)
      if (!(sd > 0.0)) throw FormatError(path.string() + ": non-positive std");
    if (s.count == 0) throw FormatError(path.string() + ": zero sample count");
    return s;
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace cropmap::dataset
