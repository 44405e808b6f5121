#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "cropmap/data/schema.hpp"
#include "cropmap/models/forest.hpp"
#include "cropmap/models/lstm.hpp"

namespace cropmap::models {

inline constexpr int kModelFormatVersion = 1;

enum class ModelKind { lstm_single, lstm_multi, random_forest };

std::string_view to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view text);

/// A trained classifier plus what is needed to feed it: the channels it
/// consumes (in order) and a reference to the normalization statistics.
struct ModelFile {
  ModelKind kind = ModelKind::lstm_single;
  data::FeatureSet feature_set = data::FeatureSet::full;
  std::vector<std::string> channel_names;
  /// Path of the stats file, relative to the model file's directory.
  std::string norm_stats;
  std::variant<MultiTaskModel, Forest> model;

  /// Indices into the standard schema, in model input order.
  std::vector<std::size_t> channel_indices() const;
  /// Values per normalized sample (12 x channels).
  std::size_t sample_size() const { return data::kMonths * channel_names.size(); }
};

/// Cropland probability for normalized samples. LSTM models use the local
/// head.
std::vector<double> predict_proba(const ModelFile& file, std::span<const std::vector<double>> samples);

std::string serialize_model(const ModelFile& file);
ModelFile deserialize_model(std::string_view text);

void write_model(const ModelFile& file, const std::filesystem::path& path);
ModelFile read_model(const std::filesystem::path& path);

}  // namespace cropmap::models
