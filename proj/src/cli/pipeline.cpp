#include "cropmap/cli/pipeline.hpp"

#include <fstream>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "cropmap/data/feature_container.hpp"
#include "cropmap/data/label_table.hpp"
#include "cropmap/dataset/regions.hpp"
#include "cropmap/dataset/split.hpp"
#include "cropmap/error.hpp"

namespace cropmap::cli {

using nlohmann::ordered_json;
using data::SplitTag;

namespace {

constexpr const char* kLocalSplitFile = "splits_local.csv";
constexpr const char* kGlobalSplitFile = "splits_global.csv";
constexpr const char* kSplitSidecar = "splits.json";

ordered_json split_identity(const ExperimentConfig& c) {
  return {{"seed", c.seed},
          {"local_labels", c.local_labels.generic_string()},
          {"global_labels", c.global_labels.generic_string()},
          {"regions", c.regions.generic_string()},
          {"geowiki_subset", to_string(c.geowiki_subset)},
          {"target_region", c.target_region},
          {"neighbour_regions", c.neighbour_regions},
          {"min_distance_m", c.min_distance_m},
          {"buffer_train", c.buffer_train}};
}

ordered_json split_counts(const SourceSplit& s) {
  ordered_json j;
  for (auto tag : {SplitTag::train, SplitTag::validation, SplitTag::test, SplitTag::unsplit}) {
    j[std::string(data::to_string(tag))] = s.rows_with(tag).size();
  }
  return j;
}

SourceSplit read_source_split(const std::string& name, const std::filesystem::path& path) {
  SourceSplit s;
  s.name = name;
  for (const auto& row : dataset::read_split_csv(path)) {
    s.rows.push_back(row.index);
    s.tags.push_back(row.split);
  }
  return s;
}

data::Dataset load_dataset(const std::filesystem::path& labels, const std::filesystem::path& features,
                           const char* what) {
  if (labels.empty() || features.empty()) {
    throw InvalidArgument(std::string("config needs ") + what + " labels and features");
  }
  return data::read_feature_container(features, data::read_label_table(labels));
}

data::Dataset rows_subset(const data::Dataset& all, const SourceSplit& split, SplitTag tag) {
  const auto rows = split.rows_with(tag);
  for (auto r : rows) {
    if (r >= all.size()) {
      throw FormatError("split file for " + split.name + " references row " + std::to_string(r) +
                        " beyond the label table");
    }
  }
  return all.subset(rows, tag);
}

}  // namespace

std::vector<std::size_t> SourceSplit::rows_with(SplitTag tag) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < rows.size(); ++i)
    if (tags[i] == tag) out.push_back(rows[i]);
  return out;
}

std::vector<std::size_t> geowiki_rows(std::span<const data::LabeledPoint> points, const ExperimentConfig& config) {
  if (config.geowiki_subset == GeowikiSubset::none) return {};
  if (config.geowiki_subset == GeowikiSubset::world) {
    std::vector<std::size_t> all(points.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    return all;
  }
  if (config.regions.empty()) {
    throw InvalidArgument("geowiki_subset '" + std::string(to_string(config.geowiki_subset)) +
                          "' needs a regions file");
  }
  std::vector<std::string> names{config.target_region};
  if (config.geowiki_subset == GeowikiSubset::neighbours) {
    names.insert(names.end(), config.neighbour_regions.begin(), config.neighbour_regions.end());
  }
  const auto regions = dataset::read_regions_geojson(config.regions).select(names);
  return dataset::indices_in_regions(points, regions);
}

SplitPlan compute_split_plan(const ExperimentConfig& config) {
  SplitPlan plan;
  if (!config.local_labels.empty()) {
    const auto points = data::read_label_table(config.local_labels);
    auto spec = dataset::three_way_spatial_split(config.seed);
    spec.min_distance_m = config.min_distance_m;
    spec.buffer_train = config.buffer_train;
    SourceSplit s;
    s.name = "local";
    s.tags = dataset::stratified_spatial_split(points, spec);
    s.rows.resize(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) s.rows[i] = i;
    plan.local = std::move(s);
  } else if (config.include_nigeria_dataset) {
    throw InvalidArgument("include_nigeria_dataset is set but local_labels is empty");
  }
  if (config.geowiki_subset != GeowikiSubset::none) {
    if (config.global_labels.empty()) throw InvalidArgument("geowiki_subset is set but global_labels is empty");
    const auto points = data::read_label_table(config.global_labels);
    SourceSplit s;
    s.name = "global";
    s.rows = geowiki_rows(points, config);
    if (s.rows.empty()) throw InvalidArgument("the selected crowd-sourced subset is empty");
    std::vector<data::LabeledPoint> subset;
    for (auto r : s.rows) subset.push_back(points[r]);
    s.tags = dataset::stratified_spatial_split(subset, dataset::two_way_split(config.seed));
    plan.global = std::move(s);
  }
  return plan;
}

void write_split_plan(const SplitPlan& plan, const ExperimentConfig& config, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  ordered_json sidecar = split_identity(config);
  ordered_json files = ordered_json::object();
  ordered_json counts = ordered_json::object();
  if (plan.local) {
    dataset::write_split_csv(plan.local->rows, plan.local->tags, dir / kLocalSplitFile);
    files["local"] = kLocalSplitFile;
    counts["local"] = split_counts(*plan.local);
  }
  if (plan.global) {
    dataset::write_split_csv(plan.global->rows, plan.global->tags, dir / kGlobalSplitFile);
    files["global"] = kGlobalSplitFile;
    counts["global"] = split_counts(*plan.global);
  }
  sidecar["files"] = std::move(files);
  sidecar["counts"] = std::move(counts);
  std::ofstream out(dir / kSplitSidecar, std::ios::binary);
  if (!out) throw FormatError("cannot write " + (dir / kSplitSidecar).string());
  out << sidecar.dump(2) << '\n';
}

std::optional<SplitPlan> read_split_plan(const ExperimentConfig& config, const std::filesystem::path& dir) {
  std::ifstream in(dir / kSplitSidecar);
  if (!in) return std::nullopt;
  ordered_json sidecar;
  try {
    sidecar = ordered_json::parse(in);
  } catch (const ordered_json::exception&) {
    return std::nullopt;
  }
  const ordered_json identity = split_identity(config);
  for (const auto& [key, value] : identity.items()) {
    if (!sidecar.contains(key) || sidecar[key] != value) return std::nullopt;
  }
  SplitPlan plan;
  const bool want_local = !config.local_labels.empty();
  const bool want_global = config.geowiki_subset != GeowikiSubset::none;
  if (want_local) {
    if (!std::filesystem::exists(dir / kLocalSplitFile)) return std::nullopt;
    plan.local = read_source_split("local", dir / kLocalSplitFile);
  }
  if (want_global) {
    if (!std::filesystem::exists(dir / kGlobalSplitFile)) return std::nullopt;
    plan.global = read_source_split("global", dir / kGlobalSplitFile);
  }
  return plan;
}

SplitPlan obtain_split_plan(const ExperimentConfig& config) {
  if (auto plan = read_split_plan(config, config.out)) {
    spdlog::info("using split files in {}", config.out.string());
    return *plan;
  }
  spdlog::info("computing splits (seed {})", config.seed);
  auto plan = compute_split_plan(config);
  write_split_plan(plan, config, config.out);
  return plan;
}

DataPools load_pools(const ExperimentConfig& config, const SplitPlan& plan) {
  DataPools pools;
  std::vector<data::Dataset> train_parts, val_parts;
  if (plan.local) {
    const auto all = load_dataset(config.local_labels, config.local_features, "local");
    auto train = rows_subset(all, *plan.local, SplitTag::train);
    auto val = rows_subset(all, *plan.local, SplitTag::validation);
    pools.test = rows_subset(all, *plan.local, SplitTag::test);
    if (config.include_nigeria_dataset) {
      const data::Dataset parts[] = {train, val};
      pools.stats_pools.push_back(data::concatenate(parts));
      train_parts.push_back(std::move(train));
      val_parts.push_back(std::move(val));
    }
  }
  if (plan.global) {
    const auto all = load_dataset(config.global_labels, config.global_features, "global");
    auto train = rows_subset(all, *plan.global, SplitTag::train);
    auto val = rows_subset(all, *plan.global, SplitTag::validation);
    const data::Dataset parts[] = {train, val};
    pools.stats_pools.push_back(data::concatenate(parts));
    train_parts.push_back(std::move(train));
    val_parts.push_back(std::move(val));
  }
  if (train_parts.empty()) throw InvalidArgument("no training data selected");
  pools.train = data::concatenate(train_parts);
  pools.train.split = SplitTag::train;
  pools.validation = data::concatenate(val_parts);
  pools.validation.split = SplitTag::validation;
  return pools;
}

dataset::NormStats training_stats(const DataPools& pools) {
  std::vector<dataset::NormStats> parts;
  for (const auto& pool : pools.stats_pools) parts.push_back(dataset::compute_norm_stats(pool));
  return dataset::merge_norm_stats(parts);
}

std::vector<models::TrainingSample> to_training_samples(const data::Dataset& dataset,
                                                        const dataset::NormStats& stats,
                                                        std::span<const std::size_t> channels) {
  std::vector<models::TrainingSample> out;
  out.reserve(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    out.push_back({dataset::apply_normalization(dataset.series[i], stats, channels), dataset.points[i].label,
                   dataset.points[i].is_local});
  }
  return out;
}

std::vector<int> labels_of(const data::Dataset& dataset) {
  std::vector<int> out;
  out.reserve(dataset.size());
  for (const auto& p : dataset.points) out.push_back(p.label);
  return out;
}

}  // namespace cropmap::cli
