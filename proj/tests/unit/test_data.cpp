#include <doctest.h>

#include <cmath>
#include <cstring>
#include <fstream>

#include "cropmap/data/feature_container.hpp"
#include "cropmap/data/label_table.hpp"
#include "cropmap/data/ndvi.hpp"
#include "cropmap/data/schema.hpp"
#include "cropmap/error.hpp"
#include "synthetic.hpp"

using namespace cropmap;
using namespace cropmap::data;
using cropmap::testing::TempDir;

namespace {

void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

// Container header size derived from the format description.
std::size_t header_bytes() {
  std::size_t n = 4 + 2 + 4 + 2 + 2;
  for (const auto& name : FeatureSchema::standard().names()) n += 2 + name.size();
  return n;
}

}  // namespace

TEST_CASE("schema has the 18 channels in file order") {
  const auto& s = FeatureSchema::standard();
  REQUIRE(s.size() == 18);
  const std::vector<std::string> expected{"VV", "VH",  "B2",  "B3",   "B4",
                                          "B8", "B5",  "B6",  "B7",   "B8A",
                                          "B9", "B11", "B12", "NDVI", "precip_monthly",
                                          "temp_2m_monthly", "elevation", "slope"};
  CHECK(s.names() == expected);
  CHECK_FALSE(s.index_of("B1"));
  CHECK_FALSE(s.index_of("B10"));
  CHECK(s.ndvi_index() == 13);
  CHECK(s[*s.index_of("elevation")].is_static);
  CHECK(s[*s.index_of("slope")].is_static);
  CHECK_FALSE(s[*s.index_of("VV")].is_static);
}

TEST_CASE("Sentinel-2 ablation keeps the optical bands and NDVI") {
  const auto idx = select_channels(FeatureSet::s2_ndvi_only);
  const auto& s = FeatureSchema::standard();
  std::vector<std::string> names;
  for (auto i : idx) names.emplace_back(s[i].name);
  CHECK(names == std::vector<std::string>{"B2", "B3", "B4", "B8", "B5", "B6", "B7", "B8A", "B9", "B11", "B12",
                                          "NDVI"});
  CHECK(select_channels(FeatureSet::full).size() == 18);
  CHECK(parse_feature_set(to_string(FeatureSet::s2_ndvi_only)) == FeatureSet::s2_ndvi_only);
  CHECK_THROWS_AS(parse_feature_set("optical"), InvalidArgument);
}

TEST_CASE("binarization is inclusive at one half") {
  CHECK(binarize_probability(0.5) == 1);
  CHECK(binarize_probability(0.6) == 1);
  CHECK(binarize_probability(0.4999999) == 0);
  for (int i = 0; i <= 100; ++i) {
    const double p = i / 100.0;
    CHECK(binarize_probability(p) == (p >= 0.5 ? 1 : 0));
  }
}

TEST_CASE("NDVI examples") {
  CHECK(compute_ndvi(0.1, 0.5).value == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(compute_ndvi(0.3, 0.3).value == 0.0);
  const auto degenerate = compute_ndvi(0.0, 0.0);
  CHECK(degenerate.value == 0.0);
  CHECK(degenerate.missing);
  CHECK_THROWS_AS(compute_ndvi(-0.1, 0.2), InvalidArgument);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const double v = compute_ndvi(u(rng), u(rng)).value;
    CHECK(v >= -1.0);
    CHECK(v <= 1.0);
  }
}

TEST_CASE("series validation") {
  std::mt19937_64 rng(2);
  auto s = testing::synthetic_series(1, rng);
  CHECK_NOTHROW(validate_series(s));
  auto bad_static = s;
  bad_static.set(3, *FeatureSchema::standard().index_of("slope"), 1234.5f);
  CHECK_THROWS_AS(validate_series(bad_static), InvalidArgument);
  auto bad_ndvi = s;
  bad_ndvi.set(0, FeatureSchema::standard().ndvi_index(), 1.5f);
  CHECK_THROWS_AS(validate_series(bad_ndvi), InvalidArgument);
  auto masked = s;
  masked.set_missing(0, 0);
  CHECK(std::isnan(masked.at(0, 0)));
  CHECK_NOTHROW(validate_series(masked));
  for (std::size_t m = 0; m < kMonths; ++m) masked.set_missing(m, 0);
  CHECK(masked.channel_fully_missing(0));
  CHECK_FALSE(masked.channel_fully_missing(1));
}

TEST_CASE("label table parsing") {
  TempDir dir;
  const auto path = dir / "labels.csv";
  write_text(path,
             "lat,lon,date,label,crop_probability,dataset_id,is_local\n"
             "9.1,7.4,2019-06-01,,0.6,geowiki,true\n"
             "9.2,7.5,2019-06-01,,0.5,geowiki,1\n"
             "9.3,7.6,2019-06-01,0,,nigeria,false\n"
             "\n"
             "9.4,7.7,2019-06-02,1,0.9,nigeria,0\n");
  const auto points = read_label_table(path);
  REQUIRE(points.size() == 4);
  CHECK(points[0].label == 1);
  CHECK(points[0].source_probability == doctest::Approx(0.6));
  CHECK(points[0].is_local);
  CHECK(points[1].label == 1);
  CHECK(points[2].label == 0);
  CHECK_FALSE(points[2].source_probability);
  CHECK(points[2].dataset_id == "nigeria");
  CHECK_FALSE(points[3].is_local);
  CHECK(format_iso_date(points[3].date) == "2019-06-02");

  const auto copy = dir / "copy.csv";
  write_label_table(points, copy);
  const auto again = read_label_table(copy);
  REQUIRE(again.size() == points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    CHECK(again[i].lat == points[i].lat);
    CHECK(again[i].lon == points[i].lon);
    CHECK(again[i].label == points[i].label);
    CHECK(again[i].date == points[i].date);
    CHECK(again[i].is_local == points[i].is_local);
  }
}

TEST_CASE("label table errors name the row") {
  TempDir dir;
  const auto path = dir / "bad.csv";
  auto expect_error = [&](const std::string& body, const std::string& needle) {
    write_text(path, body);
    try {
      read_label_table(path);
      FAIL("expected an error for: " << body);
    } catch (const FormatError& e) {
      CHECK(std::string(e.what()).find(needle) != std::string::npos);
    }
  };
  expect_error("lat,lon,date,dataset_id,is_local\n1,2,2019-01-01,x,1\n", "label");
  expect_error("lat,lon,date,label,dataset_id\n1,2,2019-01-01,1,x\n", "is_local");
  expect_error("lat,lon,date,label,dataset_id,is_local\n1,2,2019-01-01,1,x,1\n95,2,2019-01-01,1,x,1\n", "row 3");
  expect_error("lat,lon,date,label,dataset_id,is_local\n1,2,2019-13-01,1,x,1\n", "row 2");
  expect_error("lat,lon,date,label,dataset_id,is_local\n1,200,2019-01-01,1,x,1\n", "row 2");
  expect_error("lat,lon,date,label,crop_probability,dataset_id,is_local\n1,2,2019-01-01,0,0.7,x,1\n", "row 2");
}

TEST_CASE("feature container round trip is bit-identical") {
  TempDir dir;
  auto d = testing::synthetic_dataset(7, 0.5, 4, testing::kNigeriaBox);
  d.series[2].set_missing(5, 0);
  d.series[2].set_missing(0, 17);
  const auto path = dir / "features.bin";
  write_feature_container(d, path);
  const auto back = read_feature_container(path, d.points);
  REQUIRE(back.size() == 7);
  for (std::size_t i = 0; i < 7; ++i) {
    CHECK(back.series[i] == d.series[i]);
    CHECK(std::memcmp(back.series[i].values.data(), d.series[i].values.data(), sizeof(float) * kSeriesValues) == 0);
  }
  CHECK(back.series[2].is_missing(5, 0));
  CHECK(back.series[2].is_missing(0, 17));
  CHECK_FALSE(back.series[2].is_missing(5, 1));
}

TEST_CASE("feature container size and mask bit layout") {
  TempDir dir;
  auto d = testing::synthetic_dataset(1, 1.0, 9, testing::kNigeriaBox);
  d.series[0].set_missing(1, 2);  // bit k = 1*18 + 2 = 20 -> byte 2, bit 4
  const auto path = dir / "one.bin";
  write_feature_container(d, path);
  const std::string bytes = testing::read_file(path);
  CHECK(bytes.size() == header_bytes() + kSeriesValues * 4 + 27);
  CHECK(bytes.substr(0, 4) == "CLRN");
  const std::size_t mask_start = header_bytes() + kSeriesValues * 4;
  CHECK(static_cast<unsigned char>(bytes[mask_start + 2]) == (1u << 4));
  for (std::size_t b = 0; b < 27; ++b) {
    if (b != 2) CHECK(bytes[mask_start + b] == 0);
  }
}

TEST_CASE("feature container rejects malformed input") {
  TempDir dir;
  std::vector<PixelTimeSeries> none;
  CHECK_THROWS(write_feature_container(std::span<const PixelTimeSeries>(none), dir / "empty.bin"));

  auto d = testing::synthetic_dataset(2, 0.5, 5, testing::kNigeriaBox);
  const auto path = dir / "f.bin";
  write_feature_container(d, path);
  std::string bytes = testing::read_file(path);

  auto rewrite = [&](std::string b) {
    write_text(dir / "mod.bin", b);
    return dir / "mod.bin";
  };
  std::string bad_magic = bytes;
  bad_magic[0] = 'X';
  CHECK_THROWS_AS(read_feature_series(rewrite(bad_magic)), FormatError);

  std::string bad_version = bytes;
  bad_version[4] = 2;
  CHECK_THROWS_AS(read_feature_series(rewrite(bad_version)), FormatError);

  std::string bad_channels = bytes;
  bad_channels[12] = 17;  // C field
  CHECK_THROWS_AS(read_feature_series(rewrite(bad_channels)), FormatError);

  CHECK_THROWS_AS(read_feature_series(rewrite(bytes.substr(0, bytes.size() - 1))), FormatError);
  CHECK_THROWS_AS(read_feature_series(rewrite(bytes + "x")), FormatError);

  std::string nan_value = bytes;
  const float nan = std::numeric_limits<float>::quiet_NaN();
  std::memcpy(nan_value.data() + header_bytes(), &nan, 4);
  CHECK_THROWS(read_feature_series(rewrite(nan_value)));

  auto one_label = d.points;
  one_label.pop_back();
  CHECK_THROWS(read_feature_container(path, one_label));
}

TEST_CASE("dataset helpers") {
  auto d = testing::synthetic_dataset(5, 0.4, 6, testing::kNigeriaBox);
  const std::vector<std::size_t> idx{4, 1};
  const auto sub = d.subset(idx, SplitTag::validation);
  REQUIRE(sub.size() == 2);
  CHECK(sub.split == SplitTag::validation);
  CHECK(sub.series[0] == d.series[4]);
  CHECK(sub.points[1].lat == d.points[1].lat);
  const Dataset parts[] = {d, sub};
  CHECK(concatenate(parts).size() == 7);
  CHECK_THROWS(make_dataset(d.points, {}));
  CHECK(parse_split_tag("test") == SplitTag::test);
  CHECK_THROWS(parse_split_tag("holdout"));
}
