#include "cropmap/cli/commands.hpp"

#include <cstdlib>
#include <fstream>

#include <spdlog/spdlog.h>

#include "cropmap/cli/pipeline.hpp"
#include "cropmap/data/feature_container.hpp"
#include "cropmap/data/label_table.hpp"
#include "cropmap/dataset/regions.hpp"
#include "cropmap/error.hpp"
#include "cropmap/eval/external_map.hpp"
#include "cropmap/eval/zones.hpp"
#include "cropmap/models/forest.hpp"
#include "cropmap/models/model_io.hpp"

namespace cropmap::cli {

namespace {

constexpr const char* kStatsFile = "stats.json";

std::vector<std::string> channel_names(data::FeatureSet set) {
  const auto& schema = data::FeatureSchema::standard();
  std::vector<std::string> out;
  for (auto c : data::select_channels(set)) out.emplace_back(schema[c].name);
  return out;
}

double cropland_ratio(const data::Dataset& d) {
  if (d.empty()) return 0.0;
  std::size_t pos = 0;
  for (const auto& p : d.points) pos += p.label == 1;
  return static_cast<double>(pos) / static_cast<double>(d.size());
}

void log_pool(const char* name, const data::Dataset& d) {
  spdlog::info("{:<10} {:>7} samples, cropland ratio {:.3f}", name, d.size(), cropland_ratio(d));
}

struct LoadedModel {
  models::ModelFile file;
  dataset::NormStats stats;
};

LoadedModel load_model(const ExperimentConfig& config) {
  const auto path = config.model_path();
  LoadedModel m{models::read_model(path), {}};
  m.stats = dataset::read_norm_stats(path.parent_path() / m.file.norm_stats);
  return m;
}

}  // namespace

void configure_logging() {
  const char* env = std::getenv("CLRN_LOG_LEVEL");
  const std::string level = env ? env : "info";
  if (level == "error") {
    spdlog::set_level(spdlog::level::err);
  } else if (level == "warn") {
    spdlog::set_level(spdlog::level::warn);
  } else if (level == "info") {
    spdlog::set_level(spdlog::level::info);
  } else if (level == "debug") {
    spdlog::set_level(spdlog::level::debug);
  } else {
    throw InvalidArgument("CLRN_LOG_LEVEL must be one of error, warn, info, debug; got '" + level + "'");
  }
}

void write_resolved_config(const ExperimentConfig& config) {
  std::filesystem::create_directories(config.out);
  const auto path = config.out / "resolved_config.json";
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out << config_to_json(config);
}

void cmd_split(const ExperimentConfig& config) {
  write_resolved_config(config);
  const auto plan = compute_split_plan(config);
  write_split_plan(plan, config, config.out);
  for (const auto* s : {&plan.local, &plan.global}) {
    if (!*s) continue;
    spdlog::info("{} split: {} train, {} validation, {} test, {} unsplit", (*s)->name,
                 (*s)->rows_with(data::SplitTag::train).size(), (*s)->rows_with(data::SplitTag::validation).size(),
                 (*s)->rows_with(data::SplitTag::test).size(), (*s)->rows_with(data::SplitTag::unsplit).size());
  }
}

void cmd_stats(const ExperimentConfig& config) {
  write_resolved_config(config);
  const auto pools = load_pools(config, obtain_split_plan(config));
  log_pool("train", pools.train);
  log_pool("validation", pools.validation);
  log_pool("test", pools.test);
  dataset::write_norm_stats(training_stats(pools), config.out / kStatsFile);
}

void cmd_train(const ExperimentConfig& config) {
  write_resolved_config(config);
  const auto pools = load_pools(config, obtain_split_plan(config));
  log_pool("train", pools.train);
  log_pool("validation", pools.validation);
  const auto stats = training_stats(pools);
  dataset::write_norm_stats(stats, config.out / kStatsFile);

  const auto channels = data::select_channels(config.feature_set);
  const auto train_set = to_training_samples(pools.train, stats, channels);
  const auto val_set = to_training_samples(pools.validation, stats, channels);

  models::ModelFile file;
  file.kind = config.model;
  file.feature_set = config.feature_set;
  file.channel_names = channel_names(config.feature_set);
  file.norm_stats = kStatsFile;

  if (config.model == models::ModelKind::random_forest) {
    std::vector<double> x;
    std::vector<int> y;
    for (const auto& s : train_set) {
      x.insert(x.end(), s.features.begin(), s.features.end());
      y.push_back(s.label);
    }
    models::ForestConfig fc;
    fc.n_trees = config.n_trees;
    fc.seed = config.seed;
    fc.workers = config.workers;
    spdlog::info("fitting {} trees on {} samples", fc.n_trees, y.size());
    file.model = models::rf_fit(x, file.sample_size(), y, fc);
  } else {
    const auto result = models::train(config.model_spec(), train_set, val_set, config.train_config());
    models::write_history_csv(result.history, config.out / "history.csv");
    if (result.best_epoch) {
      const auto& best = result.history[*result.best_epoch - 1];
      spdlog::info("best epoch {} of {}: val loss {:.5f}, val F1 {:.4f}", *result.best_epoch,
                   result.history.size(), best.val_loss, best.val_f1);
    }
    if (result.degenerate_batches > 0) {
      spdlog::warn("{} batches had no local sample", result.degenerate_batches);
    }
    file.model = result.model;
  }
  models::write_model(file, config.out / "model.json");

  std::vector<std::vector<double>> val_features;
  for (const auto& s : val_set) val_features.push_back(s.features);
  const auto report =
      eval::evaluate_scores(models::predict_proba(file, val_features), labels_of(pools.validation), config.threshold);
  eval::write_report_json(report, config.out / "validation_report.json");
  spdlog::info("validation F1 {:.4f}, accuracy {:.4f}", report.metrics.f1, report.metrics.accuracy);
}

eval::EvalReport cmd_evaluate(const ExperimentConfig& config) {
  write_resolved_config(config);
  const auto model = load_model(config);

  data::Dataset test;
  if (!config.test_labels.empty()) {
    test = data::read_feature_container(config.test_features, data::read_label_table(config.test_labels));
  } else {
    if (config.local_labels.empty()) throw InvalidArgument("evaluate needs local_labels or test_labels");
    auto plan = read_split_plan(config, config.out);
    if (!plan || !plan->local) {
      // The local split does not depend on the crowd-sourced selection.
      ExperimentConfig local_only = config;
      local_only.geowiki_subset = GeowikiSubset::none;
      plan = compute_split_plan(local_only);
    }
    const auto all = data::read_feature_container(config.local_features, data::read_label_table(config.local_labels));
    test = all.subset(plan->local->rows_with(data::SplitTag::test), data::SplitTag::test);
  }
  if (test.empty()) throw InvalidArgument("test set is empty");
  log_pool("test", test);

  const auto channels = model.file.channel_indices();
  std::vector<std::vector<double>> features;
  for (const auto& s : test.series) features.push_back(dataset::apply_normalization(s, model.stats, channels));
  const auto scores = models::predict_proba(model.file, features);
  const auto labels = labels_of(test);

  auto report = eval::evaluate_scores(scores, labels, config.threshold);
  if (!config.zones.empty()) {
    report.zones = eval::evaluate_by_zone(test.points, scores, labels, dataset::read_regions_geojson(config.zones),
                                          config.threshold);
  }
  eval::write_report_json(report, config.out / "report.json");
  eval::write_roc_csv(report.roc, config.out / "roc.csv");
  spdlog::info("test precision {:.3f} recall {:.3f} F1 {:.3f} accuracy {:.3f}", report.metrics.precision,
               report.metrics.recall, report.metrics.f1, report.metrics.accuracy);

  for (const auto& [name, path] : config.external_maps) {
    const auto classes = eval::align_external_classes(test.points, eval::read_external_samples(path));
    const auto ext = eval::compare_external_map(classes, labels, config.positive_class);
    eval::write_report_json(ext, config.out / ("external_" + name + ".json"));
    spdlog::info("{}: F1 {:.3f} accuracy {:.3f}", name, ext.metrics.f1, ext.metrics.accuracy);
  }
  return report;
}

mapping::MapJobReport cmd_predict_map(const ExperimentConfig& config) {
  if (config.manifest.empty()) throw InvalidArgument("predict-map needs a manifest");
  write_resolved_config(config);
  const auto model = load_model(config);
  const auto manifest = mapping::read_manifest(config.manifest);
  auto report = mapping::run_map_job(model.file, model.stats, manifest, config.out, config.workers, config.threshold);
  for (const auto& t : report.tiles) {
    if (t.ok) {
      spdlog::info("tile {}: {} pixels, {} nodata, cropland fraction {:.4f}", t.tile_id, t.pixels, t.nodata,
                   t.cropland_fraction);
    } else {
      spdlog::error("tile {}: {}", t.tile_id, t.error);
    }
  }
  return report;
}

}  // namespace cropmap::cli
