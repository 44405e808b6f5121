#include <fstream>

#include <json.hpp>

#include "cropmap/data/csv.hpp"
#include "cropmap/error.hpp"
#include "cropmap/eval/report.hpp"

namespace cropmap::eval {

using nlohmann::ordered_json;

namespace {

ordered_json confusion_json(const Confusion& c) {
  return {{"tp", c.tp}, {"fp", c.fp}, {"fn", c.fn}, {"tn", c.tn}, {"total", c.total()}};
}

ordered_json metrics_json(const Metrics& m) {
  ordered_json j{{"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1},
                 {"accuracy", m.accuracy},   {"fpr", m.fpr}};
  ordered_json undefined = ordered_json::array();
  if (!m.precision_defined) undefined.push_back("precision");
  if (!m.recall_defined) undefined.push_back("recall");
  if (!m.f1_defined) undefined.push_back("f1");
  if (!m.fpr_defined) undefined.push_back("fpr");
  j["undefined"] = std::move(undefined);
  return j;
}

}  // namespace

EvalReport evaluate_scores(std::span<const double> scores, std::span<const int> labels, double threshold) {
  EvalReport r;
  r.threshold = threshold;
  r.confusion = confusion_at_threshold(scores, labels, threshold);
  r.metrics = metrics_from_confusion(r.confusion);
  if (r.confusion.positives() > 0 && r.confusion.negatives() > 0) {
    auto curve = roc_auc(scores, labels);
    r.auc = curve.auc;
    r.roc = std::move(curve.points);
  }
  return r;
}

std::string report_to_json(const EvalReport& r) {
  ordered_json j;
  j["threshold"] = r.threshold;
  j["confusion"] = confusion_json(r.confusion);
  j["metrics"] = metrics_json(r.metrics);
  j["auc"] = r.auc ? ordered_json(*r.auc) : ordered_json(nullptr);
  if (!r.zones.empty()) {
    ordered_json zones = ordered_json::array();
    for (const auto& z : r.zones) {
      ordered_json zj{{"name", z.name}, {"count", z.count}, {"confusion", confusion_json(z.confusion)}};
      zj["metrics"] = z.metrics ? metrics_json(*z.metrics) : ordered_json(nullptr);
      zones.push_back(std::move(zj));
    }
    j["zones"] = std::move(zones);
  }
  return j.dump(2) + "\n";
}

void write_report_json(const EvalReport& report, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write report " + path.string());
  out << report_to_json(report);
  if (!out) throw FormatError("I/O failure writing " + path.string());
}

void write_roc_csv(std::span<const RocPoint> points, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write ROC table " + path.string());
  out << "threshold,fpr,tpr\n";
  for (const auto& p : points) {
    out << data::format_double(p.threshold) << ',' << data::format_double(p.fpr) << ','
        << data::format_double(p.tpr) << '\n';
  }
  if (!out) throw FormatError("I/O failure writing " + path.string());
}

}  // namespace cropmap::eval
