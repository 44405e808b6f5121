#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cropmap/data/schema.hpp"
#include "cropmap/models/model_io.hpp"
#include "cropmap/models/trainer.hpp"

namespace cropmap::cli {

/// Which crowd-sourced points join the training pool.
enum class GeowikiSubset { none, nigeria, neighbours, world };

std::string_view to_string(GeowikiSubset s);
GeowikiSubset parse_geowiki_subset(std::string_view text);

/// Every key of the flat JSON config. Paths left empty are unset; relative
/// paths resolve against the config file's directory.
struct ExperimentConfig {
  std::filesystem::path local_labels;
  std::filesystem::path local_features;
  std::filesystem::path global_labels;
  std::filesystem::path global_features;
  std::filesystem::path regions;
  std::string target_region = "Nigeria";
  std::vector<std::string> neighbour_regions{"Ghana", "Togo", "Benin", "Cameroon"};
  GeowikiSubset geowiki_subset = GeowikiSubset::nigeria;
  bool include_nigeria_dataset = true;

  models::ModelKind model = models::ModelKind::lstm_single;
  data::FeatureSet feature_set = data::FeatureSet::full;
  models::LossWeighting loss = models::LossWeighting::weighted;
  double learning_rate = 1e-3;
  std::size_t batch_size = 64;
  std::size_t max_epochs = 100;
  std::size_t patience = 10;
  double alpha = 10.0;
  double dropout = 0.2;
  std::size_t hidden_size = 64;
  std::size_t n_trees = 100;

  std::uint64_t seed = 0;
  double min_distance_m = 30000.0;
  bool buffer_train = false;
  double threshold = 0.5;
  std::size_t workers = 1;

  std::filesystem::path out = "out";
  std::filesystem::path model_file;
  std::filesystem::path test_labels;
  std::filesystem::path test_features;
  std::filesystem::path zones;
  std::filesystem::path manifest;
  std::map<std::string, std::filesystem::path> external_maps;
  std::string positive_class = "crops";

  /// model_file when set, else <out>/model.json.
  std::filesystem::path model_path() const;
  models::TrainConfig train_config() const;
  models::ModelSpec model_spec() const;
};

/// Throws InvalidArgument on unknown keys, wrong types or invalid values.
ExperimentConfig parse_config(std::string_view json_text, const std::filesystem::path& base_dir);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Checks value ranges and cross-field rules.
void validate_config(const ExperimentConfig& config);

/// All keys with defaults materialized and paths made absolute.
std::string config_to_json(const ExperimentConfig& config);

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  std::optional<double> threshold;
  std::optional<std::filesystem::path> out;
};
void apply_overrides(ExperimentConfig& config, const Overrides& overrides);

}  // namespace cropmap::cli
