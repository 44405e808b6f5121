#include <doctest.h>

#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>

#include "cropmap/dataset/geo.hpp"
#include "cropmap/dataset/normalization.hpp"
#include "cropmap/dataset/regions.hpp"
#include "cropmap/dataset/split.hpp"
#include "cropmap/error.hpp"
#include "synthetic.hpp"

using namespace cropmap;
using namespace cropmap::dataset;
using data::SplitTag;
using cropmap::testing::TempDir;

namespace {

// Great-circle distance via the spherical law of cosines on unit vectors, an
// independent route to the same quantity.
double chord_distance_m(LatLon a, LatLon b) {
  auto vec = [](LatLon p) {
    const double la = p.lat * std::numbers::pi / 180.0, lo = p.lon * std::numbers::pi / 180.0;
    return std::array<double, 3>{std::cos(la) * std::cos(lo), std::cos(la) * std::sin(lo), std::sin(la)};
  };
  const auto u = vec(a), v = vec(b);
  const double cross = std::hypot(u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]);
  const double dot = u[0] * v[0] + u[1] * v[1] + u[2] * v[2];
  return kEarthRadiusM * std::atan2(cross, dot);
}

Region square(const std::string& name, double lat0, double lon0, double size) {
  Ring ring{{lat0, lon0}, {lat0, lon0 + size}, {lat0 + size, lon0 + size}, {lat0 + size, lon0}, {lat0, lon0}};
  return Region{name, {Polygon{{ring}}}};
}

std::size_t count_tag(const std::vector<SplitTag>& tags, SplitTag t) {
  return static_cast<std::size_t>(std::count(tags.begin(), tags.end(), t));
}

double min_val_test_distance(std::span<const data::LabeledPoint> pts, const std::vector<SplitTag>& tags) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (tags[i] != SplitTag::validation) continue;
    for (std::size_t j = 0; j < pts.size(); ++j) {
      if (tags[j] != SplitTag::test) continue;
      best = std::min(best, chord_distance_m({pts[i].lat, pts[i].lon}, {pts[j].lat, pts[j].lon}));
    }
  }
  return best;
}

}  // namespace

TEST_CASE("haversine against an independent great-circle computation") {
  CHECK(haversine_m({0, 0}, {0, 0}) == 0.0);
  CHECK(haversine_m({0, 0}, {0, 1}) == doctest::Approx(111'195.0).epsilon(1e-5));
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> lat(-89.0, 89.0), lon(-180.0, 180.0);
  for (int i = 0; i < 1000; ++i) {
    const LatLon a{lat(rng), lon(rng)}, b{lat(rng), lon(rng)};
    CHECK(haversine_m(a, b) == haversine_m(b, a));
    CHECK(haversine_m(a, b) >= 0.0);
    CHECK(haversine_m(a, b) == doctest::Approx(chord_distance_m(a, b)).epsilon(1e-9));
  }
}

TEST_CASE("point in polygon") {
  const auto nigeria = testing::nigeria_region();
  CHECK(nigeria.contains({9.08, 8.68}));
  CHECK_FALSE(nigeria.contains({0.0, -30.0}));
  const auto sq = square("sq", 0, 0, 1);
  CHECK(sq.contains({0.5, 0.5}));
  CHECK(sq.contains({0.0, 0.5}));  // boundary
  CHECK(sq.contains({1.0, 1.0}));  // vertex
  CHECK_FALSE(sq.contains({1.5, 0.5}));

  Ring outer{{0, 0}, {0, 4}, {4, 4}, {4, 0}, {0, 0}};
  Ring hole{{1, 1}, {1, 2}, {2, 2}, {2, 1}, {1, 1}};
  const Region donut{"donut", {Polygon{{outer, hole}}}};
  CHECK(donut.contains({3, 3}));
  CHECK_FALSE(donut.contains({1.5, 1.5}));
}

TEST_CASE("region validation") {
  CHECK_THROWS(validate_region(Region{"open", {Polygon{{Ring{{0, 0}, {0, 1}, {1, 1}, {1, 0}}}}}}));
  CHECK_THROWS(validate_region(Region{"tiny", {Polygon{{Ring{{0, 0}, {0, 1}, {0, 0}}}}}}));
  CHECK_NOTHROW(validate_region(square("ok", 0, 0, 1)));
}

TEST_CASE("subset by region is a subset and idempotent") {
  const RegionSet regions({testing::nigeria_region()});
  const auto pts = testing::synthetic_points(500, 0.5, 3, {0.0, 20.0, -5.0, 20.0});
  const auto inside = subset_by_region(pts, regions);
  CHECK(inside.size() < pts.size());
  CHECK(inside.size() > 0);
  for (const auto& p : inside) CHECK(regions.contains({p.lat, p.lon}));
  CHECK(subset_by_region(inside, regions).size() == inside.size());
  CHECK_THROWS(subset_by_region(pts, RegionSet{}));
  CHECK_THROWS(regions.select(std::vector<std::string>{"Atlantis"}));
}

TEST_CASE("GeoJSON round trip") {
  TempDir dir;
  const RegionSet regions({testing::nigeria_region(), square("Box", 10, 20, 2)});
  write_regions_geojson(regions, dir / "r.geojson");
  const auto back = read_regions_geojson(dir / "r.geojson");
  REQUIRE(back.size() == 2);
  CHECK(back.find("Box") != nullptr);
  CHECK(back.region_of({11, 21}) == std::optional<std::size_t>(1));
  CHECK(back.region_of({9.08, 8.68}) == std::optional<std::size_t>(0));

  const auto parsed = parse_regions_geojson(R"({"type":"FeatureCollection","features":[
    {"type":"Feature","properties":{"name":"Tri"},
     "geometry":{"type":"Polygon","coordinates":[[[0,0],[2,0],[0,2],[0,0]]]}}]})");
  CHECK(parsed.find("Tri")->contains({0.5, 0.5}));  // coordinates are [lon, lat]
  CHECK_THROWS(parse_regions_geojson(R"({"type":"FeatureCollection","features":[{"type":"Feature",
    "properties":{},"geometry":{"type":"Polygon","coordinates":[[[0,0],[2,0],[0,2],[0,0]]]}}]})"));
}

TEST_CASE("split counts by largest remainder") {
  const auto c = allocate_split_counts(100, {0.8, 0.2, 0.0});
  CHECK(c.train == 80);
  CHECK(c.validation == 20);
  CHECK(c.test == 0);
  for (std::size_t n = 1; n < 200; ++n) {
    const auto k = allocate_split_counts(n, {0.5, 0.25, 0.25});
    CHECK(k.train + k.validation + k.test == n);
    CHECK(std::abs(static_cast<double>(k.train) - 0.5 * n) < 1.0);
    CHECK(std::abs(static_cast<double>(k.validation) - 0.25 * n) < 1.0);
    CHECK(std::abs(static_cast<double>(k.test) - 0.25 * n) < 1.0);
  }
}

TEST_CASE("80/20 split without distance rule is exact and stratified") {
  const auto pts = testing::synthetic_points(100, 0.3, 5, testing::kNigeriaBox);
  const auto tags = stratified_spatial_split(pts, two_way_split(7));
  CHECK(count_tag(tags, SplitTag::train) == 80);
  CHECK(count_tag(tags, SplitTag::validation) == 20);
  std::size_t val_pos = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) val_pos += tags[i] == SplitTag::validation && pts[i].label == 1;
  CHECK(val_pos == 6);
  CHECK(stratified_spatial_split(pts, two_way_split(7)) == tags);
  CHECK(stratified_spatial_split(pts, two_way_split(8)) != tags);
}

TEST_CASE("three-way spatial split keeps validation and test 30 km apart") {
  const auto region = testing::nigeria_region();
  const auto pts = testing::synthetic_points(600, 0.42, 11, testing::kNigeriaBox, &region);
  const auto tags = stratified_spatial_split(pts, three_way_spatial_split(3));
  REQUIRE(tags.size() == pts.size());
  CHECK(count_tag(tags, SplitTag::unsplit) == 0);
  CHECK(min_val_test_distance(pts, tags) >= 30'000.0);

  for (int label : {0, 1}) {
    std::size_t n = 0, tr = 0, va = 0, te = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (pts[i].label != label) continue;
      ++n;
      tr += tags[i] == SplitTag::train;
      va += tags[i] == SplitTag::validation;
      te += tags[i] == SplitTag::test;
    }
    CHECK(std::abs(static_cast<double>(tr) - 0.5 * n) <= 1.0);
    CHECK(std::abs(static_cast<double>(va) - 0.25 * n) <= 1.0);
    CHECK(std::abs(static_cast<double>(te) - 0.25 * n) <= 1.0);
  }
  CHECK(stratified_spatial_split(pts, three_way_spatial_split(3)) == tags);
}

TEST_CASE("buffer_train removes train points near test") {
  const auto region = testing::nigeria_region();
  const auto pts = testing::synthetic_points(300, 0.5, 12, testing::kNigeriaBox, &region);
  auto spec = three_way_spatial_split(4);
  spec.buffer_train = true;
  const auto tags = stratified_spatial_split(pts, spec);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (tags[i] != SplitTag::train) continue;
    for (std::size_t j = 0; j < pts.size(); ++j) {
      if (tags[j] == SplitTag::test) CHECK(haversine_m({pts[i].lat, pts[i].lon}, {pts[j].lat, pts[j].lon}) >= 30'000.0);
    }
  }
}

TEST_CASE("unsatisfiable distance rule raises SplitError") {
  auto pts = testing::synthetic_points(12, 0.5, 2, {9.0, 9.01, 8.0, 8.01});
  auto spec = three_way_spatial_split(1);
  spec.max_attempts = 20;
  CHECK_THROWS_AS(stratified_spatial_split(pts, spec), SplitError);
  CHECK_THROWS(stratified_spatial_split(std::span(pts).first(3), two_way_split(1)));
}

TEST_CASE("split CSV round trip") {
  TempDir dir;
  const std::vector<std::size_t> idx{0, 3, 7};
  const std::vector<SplitTag> tags{SplitTag::train, SplitTag::test, SplitTag::unsplit};
  write_split_csv(idx, tags, dir / "s.csv");
  CHECK(testing::read_file(dir / "s.csv").rfind("index,split\n", 0) == 0);
  const auto rows = read_split_csv(dir / "s.csv");
  REQUIRE(rows.size() == 3);
  CHECK(rows[1].index == 3);
  CHECK(rows[1].split == SplitTag::test);
  CHECK(rows[2].split == SplitTag::unsplit);
}

TEST_CASE("norm stats: examples and brute-force oracle") {
  auto d = testing::synthetic_dataset(2, 0.5, 1, testing::kNigeriaBox);
  for (std::size_t m = 0; m < data::kMonths; ++m) {
    d.series[0].set(m, 0, 0.0f);
    d.series[1].set(m, 0, 2.0f);
    d.series[0].set(m, 1, 5.0f);
    d.series[1].set(m, 1, 5.0f);
  }
  const auto s = compute_norm_stats(d);
  CHECK(s.means[0] == 1.0);
  CHECK(s.stds[0] == 1.0);
  CHECK(s.means[1] == 5.0);
  CHECK(s.stds[1] == kStdFloor);
  CHECK(s.count == 2);

  auto r = testing::synthetic_dataset(40, 0.5, 2, testing::kNigeriaBox);
  r.series[3].set_missing(4, 2);
  const auto stats = compute_norm_stats(r);
  for (std::size_t c = 0; c < data::kChannels; ++c) {
    std::vector<double> vals;
    for (const auto& series : r.series)
      for (std::size_t m = 0; m < data::kMonths; ++m)
        if (!series.is_missing(m, c)) vals.push_back(series.at(m, c));
    const double mean = std::accumulate(vals.begin(), vals.end(), 0.0) / vals.size();
    double ss = 0.0;
    for (double v : vals) ss += (v - mean) * (v - mean);
    const double sd = std::max(std::sqrt(ss / vals.size()), kStdFloor);
    CHECK(stats.means[c] == doctest::Approx(mean).epsilon(1e-12));
    CHECK(stats.stds[c] == doctest::Approx(sd).epsilon(1e-9));
  }

  auto all_masked = r;
  for (auto& series : all_masked.series)
    for (std::size_t m = 0; m < data::kMonths; ++m) series.set_missing(m, 4);
  CHECK_THROWS(compute_norm_stats(all_masked));
}

TEST_CASE("merging statistics") {
  NormStats a{data::FeatureSchema::standard().names(), std::vector<double>(18, 0.0), std::vector<double>(18, 1.0), 2};
  NormStats b{a.channel_names, std::vector<double>(18, 4.0), std::vector<double>(18, 1.0), 6};
  const NormStats ab[] = {a, b};
  const auto m = merge_norm_stats(ab);
  CHECK(m.means[0] == 3.0);
  CHECK(m.count == 8);
  NormStats c = a, e = a;
  c.count = 3;
  e.count = 9;
  const NormStats ce[] = {c, e};
  CHECK(merge_norm_stats(ce).stds[5] == 1.0);
  const NormStats one[] = {b};
  CHECK(merge_norm_stats(one) == b);

  const auto r = compute_norm_stats(testing::synthetic_dataset(25, 0.5, 7, testing::kNigeriaBox));
  const std::vector<NormStats> copies(5, r);
  auto merged = merge_norm_stats(copies);
  CHECK(merged.means == r.means);
  CHECK(merged.stds == r.stds);
  CHECK(merged.count == 5 * r.count);
  CHECK_THROWS(merge_norm_stats(std::span<const NormStats>{}));
}

TEST_CASE("merged mean equals the pooled mean") {
  const auto d1 = testing::synthetic_dataset(30, 0.5, 8, testing::kNigeriaBox);
  const auto d2 = testing::synthetic_dataset(70, 0.5, 9, testing::kNigeriaBox);
  const NormStats parts[] = {compute_norm_stats(d1), compute_norm_stats(d2)};
  const data::Dataset both[] = {d1, d2};
  const auto pooled = compute_norm_stats(data::concatenate(both));
  const auto merged = merge_norm_stats(parts);
  for (std::size_t c = 0; c < data::kChannels; ++c) {
    CHECK(merged.means[c] == doctest::Approx(pooled.means[c]).epsilon(1e-12));
  }
}

TEST_CASE("normalization") {
  const auto d = testing::synthetic_dataset(50, 0.5, 10, testing::kNigeriaBox);
  const auto stats = compute_norm_stats(d);
  const auto channels = data::select_channels(data::FeatureSet::full);
  std::vector<double> sums(18, 0.0);
  for (const auto& s : d.series) {
    const auto z = apply_normalization(s, stats, channels);
    REQUIRE(z.size() == 12 * 18);
    for (std::size_t m = 0; m < 12; ++m)
      for (std::size_t c = 0; c < 18; ++c) sums[c] += z[m * 18 + c];
    const auto back = denormalize(z, stats, channels);
    const auto again = apply_normalization(s, stats, channels);
    for (std::size_t k = 0; k < z.size(); ++k) {
      CHECK(back[k] == doctest::Approx(s.values[k]).epsilon(1e-9));
      CHECK(again[k] == z[k]);
    }
  }
  for (double s : sums) CHECK(std::abs(s / (50.0 * 12.0)) < 1e-9);

  data::PixelTimeSeries p = d.series[0];
  p.set(0, 0, static_cast<float>(stats.means[0]));
  p.set(1, 0, static_cast<float>(stats.means[0] + stats.stds[0]));
  p.set_missing(2, 0);
  const auto z = apply_normalization(p, stats, channels);
  CHECK(z[0] == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(z[18] == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(z[36] == 0.0);

  const auto sub = data::select_channels(data::FeatureSet::s2_ndvi_only);
  CHECK(apply_normalization(p, stats, sub).size() == 12 * sub.size());

  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  std::vector<double> x(12 * 18);
  for (auto& v : x) v = g(rng);
  const auto restored = denormalize(x, stats, channels);
  data::PixelTimeSeries q;
  for (std::size_t k = 0; k < x.size(); ++k) q.values[k] = static_cast<float>(restored[k]);
  const auto renorm = apply_normalization(q, stats, channels);
  for (std::size_t k = 0; k < x.size(); ++k) CHECK(renorm[k] == doctest::Approx(x[k]).epsilon(1e-5));
}

TEST_CASE("norm stats JSON round trip") {
  TempDir dir;
  const auto stats = compute_norm_stats(testing::synthetic_dataset(10, 0.5, 11, testing::kNigeriaBox));
  write_norm_stats(stats, dir / "stats.json");
  CHECK(read_norm_stats(dir / "stats.json") == stats);
}
