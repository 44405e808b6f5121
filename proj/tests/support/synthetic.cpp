#include "synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "cropmap/data/feature_container.hpp"
#include "cropmap/data/label_table.hpp"
#include "cropmap/dataset/normalization.hpp"

namespace cropmap::testing {

dataset::Region nigeria_region() {
  // Clockwise outline traced from the border, (lat, lon); coarse on purpose.
  const std::vector<dataset::LatLon> ring{
      {6.4, 2.7},   {9.1, 2.7},   {11.7, 3.6},  {13.7, 4.1},  {13.3, 6.8},  {13.0, 9.6},
      {13.3, 12.5}, {13.0, 13.6}, {12.1, 14.6}, {10.0, 13.3}, {8.5, 12.2},  {6.7, 11.4},
      {6.8, 10.6},  {4.9, 8.9},   {4.3, 6.9},   {4.3, 5.8},   {6.4, 2.7}};
  return dataset::Region{"Nigeria", {dataset::Polygon{{ring}}}};
}

data::PixelTimeSeries synthetic_series(int label, std::mt19937_64& rng, const SeriesOptions& opts) {
  const auto& schema = data::FeatureSchema::standard();
  const std::size_t ndvi = schema.ndvi_index();
  std::normal_distribution<double> noise(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  data::PixelTimeSeries s;
  std::vector<double> statics(schema.size());
  for (auto& v : statics) v = 100.0 * unit(rng);
  const double phase = 0.5 * (unit(rng) - 0.5);
  for (std::size_t m = 0; m < data::kMonths; ++m) {
    for (std::size_t c = 0; c < schema.size(); ++c) {
      double v;
      if (c == ndvi) {
        const double season =
            label == 1 ? opts.ndvi_amplitude * std::sin(2.0 * std::numbers::pi * (m / 12.0 + phase)) : 0.0;
        v = std::clamp(0.3 + season + opts.ndvi_noise * noise(rng), -1.0, 1.0);
      } else if (schema[c].is_static) {
        v = statics[c];
      } else {
        v = noise(rng);
      }
      s.set(m, c, static_cast<float>(v));
    }
  }
  return s;
}

std::vector<data::LabeledPoint> synthetic_points(std::size_t n, double positive_ratio, std::uint64_t seed,
                                                 const BBox& box, const dataset::Region* region, bool is_local,
                                                 const std::string& dataset_id) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> lat(box.lat_min, box.lat_max);
  std::uniform_real_distribution<double> lon(box.lon_min, box.lon_max);
  const auto n_pos = static_cast<std::size_t>(std::llround(static_cast<double>(n) * positive_ratio));
  std::vector<int> labels(n, 0);
  std::fill(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(n_pos), 1);
  std::shuffle(labels.begin(), labels.end(), rng);
  std::vector<data::LabeledPoint> out;
  for (std::size_t i = 0; i < n; ++i) {
    data::LabeledPoint p;
    do {
      p.lat = lat(rng);
      p.lon = lon(rng);
    } while (region && !region->contains({p.lat, p.lon}));
    p.date = std::chrono::year_month_day{std::chrono::year{2019}, std::chrono::month{6}, std::chrono::day{1}};
    p.label = labels[i];
    p.dataset_id = dataset_id;
    p.is_local = is_local;
    out.push_back(p);
  }
  return out;
}

data::Dataset synthetic_dataset(std::size_t n, double positive_ratio, std::uint64_t seed, const BBox& box,
                                const dataset::Region* region, bool is_local, const SeriesOptions& opts) {
  auto points = synthetic_points(n, positive_ratio, seed, box, region, is_local);
  std::mt19937_64 rng(seed ^ 0xA5A5A5A5ULL);
  std::vector<data::PixelTimeSeries> series;
  for (const auto& p : points) series.push_back(synthetic_series(p.label, rng, opts));
  return data::make_dataset(std::move(points), std::move(series));
}

std::vector<models::TrainingSample> normalized_samples(const data::Dataset& d) {
  const auto stats = dataset::compute_norm_stats(d);
  const auto channels = data::select_channels(data::FeatureSet::full);
  std::vector<models::TrainingSample> out;
  for (std::size_t i = 0; i < d.size(); ++i) {
    out.push_back({dataset::apply_normalization(d.series[i], stats, channels), d.points[i].label,
                   d.points[i].is_local});
  }
  return out;
}

ExperimentFiles write_experiment(const std::filesystem::path& dir, std::size_t n_local, std::size_t n_global,
                                 std::uint64_t seed, double local_positive_ratio) {
  std::filesystem::create_directories(dir);
  ExperimentFiles f{dir / "nigeria_labels.csv", dir / "nigeria_features.clrn", dir / "geowiki_labels.csv",
                    dir / "geowiki_features.clrn", dir / "regions.geojson"};
  const auto nigeria = nigeria_region();
  auto local = synthetic_dataset(n_local, local_positive_ratio, seed, kNigeriaBox, &nigeria, true);
  for (auto& p : local.points) p.dataset_id = "nigeria";

  const std::size_t inside = n_global / 2;
  auto g1 = synthetic_dataset(inside, 0.5, seed + 1, kNigeriaBox, &nigeria, false);
  auto g2 = synthetic_dataset(n_global - inside, 0.5, seed + 2, kGhanaBox, nullptr, false);
  const data::Dataset parts[] = {g1, g2};
  auto global = data::concatenate(parts);
  for (auto& p : global.points) p.dataset_id = "geowiki";

  data::write_label_table(local.points, f.local_labels);
  data::write_feature_container(local, f.local_features);
  data::write_label_table(global.points, f.global_labels);
  data::write_feature_container(global, f.global_features);

  const dataset::Ring ghana{{kGhanaBox.lat_min, kGhanaBox.lon_min},
                            {kGhanaBox.lat_min, kGhanaBox.lon_max},
                            {kGhanaBox.lat_max, kGhanaBox.lon_max},
                            {kGhanaBox.lat_max, kGhanaBox.lon_min},
                            {kGhanaBox.lat_min, kGhanaBox.lon_min}};
  const dataset::RegionSet regions({nigeria, dataset::Region{"Ghana", {dataset::Polygon{{ghana}}}}});
  dataset::write_regions_geojson(regions, f.regions);
  return f;
}

std::string experiment_config(const ExperimentFiles& files, const std::filesystem::path& out,
                              const std::string& extra) {
  std::ostringstream s;
  auto q = [](const std::filesystem::path& p) { return "\"" + p.generic_string() + "\""; };
  s << "{\n  \"local_labels\": " << q(files.local_labels) << ",\n  \"local_features\": " << q(files.local_features)
    << ",\n  \"global_labels\": " << q(files.global_labels)
    << ",\n  \"global_features\": " << q(files.global_features) << ",\n  \"regions\": " << q(files.regions)
    << ",\n  \"out\": " << q(out);
  if (!extra.empty()) s << ",\n  " << extra;
  s << "\n}\n";
  return s.str();
}

TempDir::TempDir(const std::string& prefix) {
  static std::mt19937_64 rng(std::random_device{}());
  const auto base = std::filesystem::temp_directory_path();
  do {
    path_ = base / (prefix + "-" + std::to_string(rng() % 1'000'000'000));
  } while (std::filesystem::exists(path_));
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::filesystem::path fixture_dir() { return CROPMAP_TEST_DATA_DIR; }

}  // namespace cropmap::testing
