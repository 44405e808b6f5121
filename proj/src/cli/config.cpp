#include "cropmap/cli/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "cropmap/error.hpp"

namespace cropmap::cli {

using nlohmann::ordered_json;

namespace {

std::filesystem::path resolve(const std::filesystem::path& p, const std::filesystem::path& base) {
  if (p.empty()) return p;
  return std::filesystem::absolute(p.is_relative() ? base / p : p).lexically_normal();
}

const std::set<std::string, std::less<>>& known_keys() {
  static const std::set<std::string, std::less<>> keys{
      "local_labels",   "local_features", "global_labels",  "global_features", "regions",
      "target_region",  "neighbour_regions", "geowiki_subset", "include_nigeria_dataset", "model",
      "feature_set",    "loss",           "learning_rate",  "batch_size",      "max_epochs",
      "patience",       "alpha",          "dropout",        "hidden_size",     "n_trees",
      "seed",           "min_distance_m", "buffer_train",   "threshold",       "workers",
      "out",            "model_file",     "test_labels",    "test_features",   "zones",
      "manifest",       "external_maps",  "positive_class"};
  return keys;
}

}  // namespace

std::string_view to_string(GeowikiSubset s) {
  switch (s) {
    case GeowikiSubset::none: return "none";
    case GeowikiSubset::nigeria: return "nigeria";
    case GeowikiSubset::neighbours: return "neighbours";
    case GeowikiSubset::world: return "world";
  }
  return "?";
}

GeowikiSubset parse_geowiki_subset(std::string_view text) {
  for (auto s : {GeowikiSubset::none, GeowikiSubset::nigeria, GeowikiSubset::neighbours, GeowikiSubset::world}) {
    if (text == to_string(s)) return s;
  }
  throw InvalidArgument("unknown geowiki_subset '" + std::string(text) + "'");
}

std::filesystem::path ExperimentConfig::model_path() const {
  return model_file.empty() ? out / "model.json" : model_file;
}

models::TrainConfig ExperimentConfig::train_config() const {
  models::TrainConfig t;
  t.learning_rate = learning_rate;
  t.batch_size = batch_size;
  t.max_epochs = max_epochs;
  t.patience = patience;
  t.seed = seed;
  t.loss_weighting = loss;
  return t;
}

models::ModelSpec ExperimentConfig::model_spec() const {
  models::ModelSpec s;
  s.multi_headed = model == models::ModelKind::lstm_multi;
  s.input_size = data::select_channels(feature_set).size();
  s.hidden_size = hidden_size;
  s.alpha = alpha;
  s.dropout = dropout;
  return s;
}

ExperimentConfig parse_config(std::string_view json_text, const std::filesystem::path& base_dir) {
  ExperimentConfig c;
  try {
    const auto j = ordered_json::parse(json_text);
    if (!j.is_object()) throw InvalidArgument("config must be a JSON object");
    for (const auto& [key, value] : j.items()) {
      if (!known_keys().contains(key)) throw InvalidArgument("unknown config key '" + key + "'");
    }
    auto path = [&](const char* key, std::filesystem::path& dst) {
      if (j.contains(key)) dst = j[key].get<std::string>();
      dst = resolve(dst, base_dir);
    };
    auto get = [&](const char* key, auto& dst) {
      if (j.contains(key)) dst = j[key].get<std::decay_t<decltype(dst)>>();
    };
    path("local_labels", c.local_labels);
    path("local_features", c.local_features);
    path("global_labels", c.global_labels);
    path("global_features", c.global_features);
    path("regions", c.regions);
    get("target_region", c.target_region);
    get("neighbour_regions", c.neighbour_regions);
    if (j.contains("geowiki_subset")) c.geowiki_subset = parse_geowiki_subset(j["geowiki_subset"].get<std::string>());
    get("include_nigeria_dataset", c.include_nigeria_dataset);
    if (j.contains("model")) c.model = models::parse_model_kind(j["model"].get<std::string>());
    if (j.contains("feature_set")) c.feature_set = data::parse_feature_set(j["feature_set"].get<std::string>());
    if (j.contains("loss")) c.loss = models::parse_loss_weighting(j["loss"].get<std::string>());
    get("learning_rate", c.learning_rate);
    get("batch_size", c.batch_size);
    get("max_epochs", c.max_epochs);
    get("patience", c.patience);
    get("alpha", c.alpha);
    get("dropout", c.dropout);
    get("hidden_size", c.hidden_size);
    get("n_trees", c.n_trees);
    get("seed", c.seed);
    get("min_distance_m", c.min_distance_m);
    get("buffer_train", c.buffer_train);
    get("threshold", c.threshold);
    get("workers", c.workers);
    path("out", c.out);
    path("model_file", c.model_file);
    path("test_labels", c.test_labels);
    path("test_features", c.test_features);
    path("zones", c.zones);
    path("manifest", c.manifest);
    if (j.contains("external_maps")) {
      for (const auto& [name, p] : j["external_maps"].items()) {
        c.external_maps[name] = resolve(p.get<std::string>(), base_dir);
      }
    }
    get("positive_class", c.positive_class);
  } catch (const ordered_json::exception& e) {
    throw InvalidArgument(std::string("config: ") + e.what());
  }
  validate_config(c);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), std::filesystem::absolute(path).parent_path());
}

void validate_config(const ExperimentConfig& c) {
  if (c.geowiki_subset == GeowikiSubset::none && !c.include_nigeria_dataset) {
    throw InvalidArgument("config selects no training data (geowiki_subset none and no Nigeria dataset)");
  }
  if (!(c.alpha > 0.0)) throw InvalidArgument("alpha must be > 0");
  if (!(c.dropout >= 0.0 && c.dropout < 1.0)) throw InvalidArgument("dropout must lie in [0, 1)");
  if (c.hidden_size == 0) throw InvalidArgument("hidden_size must be > 0");
  if (c.n_trees == 0) throw InvalidArgument("n_trees must be > 0");
  if (!(c.min_distance_m >= 0.0)) throw InvalidArgument("min_distance_m must be >= 0");
  if (!(c.threshold >= 0.0 && c.threshold <= 1.0)) throw InvalidArgument("threshold must lie in [0, 1]");
  if (c.workers == 0) throw InvalidArgument("workers must be > 0");
  if (c.out.empty()) throw InvalidArgument("out must be set");
  if (c.test_labels.empty() != c.test_features.empty()) {
    throw InvalidArgument("test_labels and test_features must be given together");
  }
  if (c.model != models::ModelKind::random_forest) models::validate_train_config(c.train_config());
}

std::string config_to_json(const ExperimentConfig& c) {
  auto p = [](const std::filesystem::path& path) { return path.generic_string(); };
  ordered_json maps = ordered_json::object();
  for (const auto& [name, path] : c.external_maps) maps[name] = p(path);
  const ordered_json j{{"local_labels", p(c.local_labels)},
                       {"local_features", p(c.local_features)},
                       {"global_labels", p(c.global_labels)},
                       {"global_features", p(c.global_features)},
                       {"regions", p(c.regions)},
                       {"target_region", c.target_region},
                       {"neighbour_regions", c.neighbour_regions},
                       {"geowiki_subset", to_string(c.geowiki_subset)},
                       {"include_nigeria_dataset", c.include_nigeria_dataset},
                       {"model", models::to_string(c.model)},
                       {"feature_set", data::to_string(c.feature_set)},
                       {"loss", models::to_string(c.loss)},
                       {"learning_rate", c.learning_rate},
                       {"batch_size", c.batch_size},
                       {"max_epochs", c.max_epochs},
                       {"patience", c.patience},
                       {"alpha", c.alpha},
                       {"dropout", c.dropout},
                       {"hidden_size", c.hidden_size},
                       {"n_trees", c.n_trees},
                       {"seed", c.seed},
                       {"min_distance_m", c.min_distance_m},
                       {"buffer_train", c.buffer_train},
                       {"threshold", c.threshold},
                       {"workers", c.workers},
                       {"out", p(c.out)},
                       {"model_file", p(c.model_file)},
                       {"test_labels", p(c.test_labels)},
                       {"test_features", p(c.test_features)},
                       {"zones", p(c.zones)},
                       {"manifest", p(c.manifest)},
                       {"external_maps", std::move(maps)},
                       {"positive_class", c.positive_class}};
  return j.dump(2) + "\n";
}

void apply_overrides(ExperimentConfig& c, const Overrides& o) {
  if (o.seed) c.seed = *o.seed;
  if (o.workers) c.workers = *o.workers;
  if (o.threshold) c.threshold = *o.threshold;
  if (o.out) c.out = std::filesystem::absolute(*o.out).lexically_normal();
  validate_config(c);
}

}  // namespace cropmap::cli
