#pragma once

#include "cropmap/cli/config.hpp"
#include "cropmap/eval/report.hpp"
#include "cropmap/mapping/map_job.hpp"

namespace cropmap::cli {

/// Every command writes resolved_config.json under config.out first.
void write_resolved_config(const ExperimentConfig& config);

/// Writes split CSVs and their seed sidecar.
void cmd_split(const ExperimentConfig& config);

/// Trains the configured model and writes model.json, stats.json,
/// history.csv (LSTM) and validation_report.json.
void cmd_train(const ExperimentConfig& config);

/// Scores the test set: report.json, roc.csv and one external_<name>.json
/// per configured land-cover product.
eval::EvalReport cmd_evaluate(const ExperimentConfig& config);

/// Tiled map inference; the caller exits nonzero when a tile failed.
mapping::MapJobReport cmd_predict_map(const ExperimentConfig& config);

/// Writes stats.json for the configured training pool and logs split sizes
/// and cropland ratios.
void cmd_stats(const ExperimentConfig& config);

/// Reads CLRN_LOG_LEVEL (error, warn, info, debug; default info).
void configure_logging();

}  // namespace cropmap::cli
