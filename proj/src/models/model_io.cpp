#include "cropmap/models/model_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cropmap/error.hpp"

namespace cropmap::models {

using nlohmann::json;

namespace {

json tensor_json(const Tensor& t) { return json{{"shape", t.shape()}, {"values", t.values()}}; }

Tensor tensor_from_json(const json& j) {
  auto shape = j.at("shape").get<std::vector<std::size_t>>();
  auto values = j.at("values").get<std::vector<double>>();
  return Tensor(std::move(shape), std::move(values));
}

json forest_json(const Forest& forest) {
  json trees = json::array();
  for (const auto& tree : forest.trees) {
    json nodes = json::array();
    for (const auto& n : tree.nodes) {
      nodes.push_back({{"feature", n.feature},
                       {"threshold", n.threshold},
                       {"left", n.left},
                       {"right", n.right},
                       {"leaf_prob", n.leaf_prob}});
    }
    trees.push_back({{"bootstrap", tree.bootstrap}, {"nodes", std::move(nodes)}});
  }
  return trees;
}

Forest forest_from_json(const json& trees, std::size_t n_features) {
  Forest forest;
  forest.n_features = n_features;
  for (const auto& t : trees) {
    DecisionTree tree;
    tree.bootstrap = t.at("bootstrap").get<std::vector<std::uint32_t>>();
    for (const auto& n : t.at("nodes")) {
      TreeNode node;
      node.feature = n.at("feature").get<int>();
      node.threshold = n.at("threshold").get<double>();
      node.left = n.at("left").get<int>();
      node.right = n.at("right").get<int>();
      node.leaf_prob = n.at("leaf_prob").get<double>();
      tree.nodes.push_back(node);
    }
    const auto count = static_cast<int>(tree.nodes.size());
    if (count == 0) throw FormatError("model file: tree without nodes");
    for (const auto& node : tree.nodes) {
      if (node.is_leaf()) continue;
      if (node.left <= 0 || node.left >= count || node.right <= 0 || node.right >= count ||
          static_cast<std::size_t>(node.feature) >= n_features) {
        throw FormatError("model file: tree node references out of range");
      }
    }
    forest.trees.push_back(std::move(tree));
  }
  if (forest.trees.empty()) throw FormatError("model file: forest without trees");
  return forest;
}

}  // namespace

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::lstm_single: return "lstm_single";
    case ModelKind::lstm_multi: return "lstm_multi";
    case ModelKind::random_forest: return "random_forest";
  }
  return "?";
}

ModelKind parse_model_kind(std::string_view text) {
  if (text == "lstm_single") return ModelKind::lstm_single;
  if (text == "lstm_multi") return ModelKind::lstm_multi;
  if (text == "random_forest" || text == "rf") return ModelKind::random_forest;
  throw InvalidArgument("unknown model kind '" + std::string(text) + "'");
}

std::vector<std::size_t> ModelFile::channel_indices() const {
  const auto& schema = data::FeatureSchema::standard();
  std::vector<std::size_t> out;
  for (const auto& name : channel_names) {
    const auto idx = schema.index_of(name);
    if (!idx) throw InvalidArgument("model uses unknown channel '" + name + "'");
    out.push_back(*idx);
  }
  return out;
}

std::vector<double> predict_proba(const ModelFile& file, std::span<const std::vector<double>> samples) {
  const std::size_t expected = file.sample_size();
  for (const auto& s : samples) {
    if (s.size() != expected) {
      throw InvalidArgument("predict: sample has " + std::to_string(s.size()) + " values, model expects " +
                            std::to_string(expected));
    }
  }
  if (const auto* lstm = std::get_if<MultiTaskModel>(&file.model)) {
    return predict_probabilities(*lstm, samples, HeadKind::local);
  }
  const auto& forest = std::get<Forest>(file.model);
  std::vector<double> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(rf_predict(forest, s));
  return out;
}

std::string serialize_model(const ModelFile& file) {
  json j;
  j["format_version"] = kModelFormatVersion;
  j["model_kind"] = to_string(file.kind);
  j["feature_set"] = data::to_string(file.feature_set);
  j["channel_names"] = file.channel_names;
  j["norm_stats"] = file.norm_stats;
  if (const auto* lstm = std::get_if<MultiTaskModel>(&file.model)) {
    if ((file.kind == ModelKind::lstm_multi) != lstm->spec.multi_headed ||
        file.kind == ModelKind::random_forest) {
      throw InvalidArgument("model kind does not match the stored network");
    }
    j["hyperparameters"] = {{"input_size", lstm->spec.input_size},
                            {"hidden_size", lstm->spec.hidden_size},
                            {"alpha", lstm->spec.alpha},
                            {"dropout", lstm->spec.dropout}};
    json params = json::object();
    for (const auto& [name, t] : lstm->params) params[name] = tensor_json(t);
    j["parameters"] = std::move(params);
  } else {
    if (file.kind != ModelKind::random_forest) throw InvalidArgument("model kind does not match the stored forest");
    const auto& forest = std::get<Forest>(file.model);
    j["hyperparameters"] = {{"n_features", forest.n_features}, {"n_trees", forest.trees.size()}};
    j["trees"] = forest_json(forest);
  }
  return j.dump(1) + "\n";
}

ModelFile deserialize_model(std::string_view text) {
  try {
    const json j = json::parse(text);
    const int version = j.at("format_version").get<int>();
    if (version != kModelFormatVersion) {
      throw FormatError("unsupported model format_version " + std::to_string(version));
    }
    ModelFile file;
    file.kind = parse_model_kind(j.at("model_kind").get<std::string>());
    file.feature_set = data::parse_feature_set(j.at("feature_set").get<std::string>());
    file.channel_names = j.at("channel_names").get<std::vector<std::string>>();
    file.norm_stats = j.at("norm_stats").get<std::string>();
    file.channel_indices();
    const auto& hp = j.at("hyperparameters");
    if (file.kind == ModelKind::random_forest) {
      const auto n_features = hp.at("n_features").get<std::size_t>();
      if (n_features != file.sample_size()) throw FormatError("forest feature count disagrees with channels");
      file.model = forest_from_json(j.at("trees"), n_features);
    } else {
      MultiTaskModel m;
      m.spec.multi_headed = file.kind == ModelKind::lstm_multi;
      m.spec.input_size = hp.at("input_size").get<std::size_t>();
      m.spec.hidden_size = hp.at("hidden_size").get<std::size_t>();
      m.spec.alpha = hp.at("alpha").get<double>();
      m.spec.dropout = hp.at("dropout").get<double>();
      if (m.spec.input_size != file.channel_names.size()) {
        throw FormatError("network input size disagrees with channels");
      }
      for (const auto& [name, t] : j.at("parameters").items()) m.params.emplace(name, tensor_from_json(t));
      validate_model(m);
      file.model = std::move(m);
    }
    return file;
  } catch (const json::exception& e) {
    throw FormatError(std::string("model file: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw FormatError(std::string("model file: ") + e.what());
  }
}

void write_model(const ModelFile& file, const std::filesystem::path& path) {
  const std::string text = serialize_model(file);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write model " + path.string());
  out << text;
  if (!out) throw FormatError("I/O failure writing " + path.string());
}

ModelFile read_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open model " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return deserialize_model(buf.str());
}

}  // namespace cropmap::models
