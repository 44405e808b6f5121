#include <iostream>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "cropmap/cli/commands.hpp"
#include "cropmap/error.hpp"

namespace {

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  std::optional<double> threshold;
  std::optional<std::string> out;
};

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--config", o.config, "experiment config (JSON)");
  cmd->add_option("--seed", o.seed, "override seed");
  cmd->add_option("--workers", o.workers, "override worker count")->check(CLI::PositiveNumber);
  cmd->add_option("--threshold", o.threshold, "override decision threshold")->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--out", o.out, "override output directory");
}

cropmap::cli::ExperimentConfig resolve(const Options& o) {
  auto config = o.config.empty() ? cropmap::cli::parse_config("{}", std::filesystem::current_path())
                                 : cropmap::cli::load_config(o.config);
  cropmap::cli::Overrides overrides;
  overrides.seed = o.seed;
  overrides.workers = o.workers;
  overrides.threshold = o.threshold;
  if (o.out) overrides.out = *o.out;
  cropmap::cli::apply_overrides(config, overrides);
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cropland mapping pipeline: splits, training, evaluation and map inference"};
  app.require_subcommand(1);
  Options opts;
  auto* split = app.add_subcommand("split", "write train/validation/test split files");
  auto* train = app.add_subcommand("train", "train a model and write model.json");
  auto* evaluate = app.add_subcommand("evaluate", "score a model on the test set");
  auto* predict = app.add_subcommand("predict-map", "predict cropland grids for a tile manifest");
  auto* stats = app.add_subcommand("stats", "compute normalization statistics");
  for (auto* cmd : {split, train, evaluate, predict, stats}) add_common(cmd, opts);

  CLI11_PARSE(app, argc, argv);

  try {
    cropmap::cli::configure_logging();
    const auto config = resolve(opts);
    if (split->parsed()) {
      cropmap::cli::cmd_split(config);
    } else if (train->parsed()) {
      cropmap::cli::cmd_train(config);
    } else if (evaluate->parsed()) {
      cropmap::cli::cmd_evaluate(config);
    } else if (predict->parsed()) {
      if (!cropmap::cli::cmd_predict_map(config).ok()) {
        spdlog::error("map job finished with failed tiles; see {}", (config.out / "map_report.json").string());
        return 2;
      }
    } else if (stats->parsed()) {
      cropmap::cli::cmd_stats(config);
    }
  } catch (const cropmap::Error& e) {
    spdlog::error("{}", e.what());
    return 1;
  } catch (const std::exception& e) {
    spdlog::error("unexpected failure: {}", e.what());
    return 1;
  }
  return 0;
}
