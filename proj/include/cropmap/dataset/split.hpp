#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "cropmap/data/schema.hpp"
#include "cropmap/error.hpp"

namespace cropmap::dataset {

struct SplitFractions {
  double train = 0.8;
  double validation = 0.2;
  double test = 0.0;
};

struct SplitSpec {
  SplitFractions fractions;
  /// Minimum great-circle distance between any validation and any test point.
  double min_distance_m = 0.0;
  bool stratify = true;
  std::uint64_t seed = 0;
  /// Also keep train points min_distance_m away from test points. Train
  /// points that cannot satisfy this are tagged `unsplit` (excluded).
  bool buffer_train = false;
  int max_attempts = 1000;
};

/// 80 % train / 20 % validation, no distance rule.
SplitSpec two_way_split(std::uint64_t seed);
/// 50 / 25 / 25 with validation and test 30 km apart.
SplitSpec three_way_spatial_split(std::uint64_t seed);

class SplitError : public Error {
 public:
  using Error::Error;
};

/// Per-stratum target sizes from fractions by largest remainder; each count
/// is within 1 of n * fraction and the three sum to n.
struct SplitCounts {
  std::size_t train = 0;
  std::size_t validation = 0;
  std::size_t test = 0;
};
SplitCounts allocate_split_counts(std::size_t n, const SplitFractions& fractions);

/// Seeded stratified assignment of every point to exactly one split.
///
/// With a distance rule, test points are grown as compact clusters over the
/// "closer than min_distance_m" neighbour graph, then validation points are
/// drawn at random from points with no test neighbour. Failed attempts retry
/// with larger clusters and a derived seed, up to max_attempts.
std::vector<data::SplitTag> stratified_spatial_split(std::span<const data::LabeledPoint> points,
                                                     const SplitSpec& spec);

/// Indices of points carrying `tag`, ascending.
std::vector<std::size_t> indices_with_tag(std::span<const data::SplitTag> assignment,
                                          data::SplitTag tag);

/// CSV with header "index,split".
void write_split_csv(std::span<const std::size_t> point_indices,
                     std::span<const data::SplitTag> assignment,
                     const std::filesystem::path& path);
struct SplitRow {
  std::size_t index;
  data::SplitTag split;
};
std::vector<SplitRow> read_split_csv(const std::filesystem::path& path);

}  // namespace cropmap::dataset
