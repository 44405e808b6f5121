#include "cropmap/dataset/split.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <string>

#include "cropmap/data/csv.hpp"
#include "cropmap/dataset/geo.hpp"

namespace cropmap::dataset {

using data::LabeledPoint;
using data::SplitTag;

namespace {

constexpr double kMetresPerDegreeLat = kEarthRadiusM * 3.14159265358979323846 / 180.0;

/// For every point, the indices of other points strictly closer than `d`.
std::vector<std::vector<std::size_t>> neighbour_lists(std::span<const LabeledPoint> pts, double d) {
  std::vector<std::size_t> order(pts.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return pts[a].lat < pts[b].lat || (pts[a].lat == pts[b].lat && a < b);
  });
  // Latitude difference alone bounds the great-circle distance from below.
  const double lat_window = d / kMetresPerDegreeLat;
  std::vector<std::vector<std::size_t>> nb(pts.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    const auto& a = pts[order[i]];
    for (std::size_t j = i + 1; j < order.size(); ++j) {
      const auto& b = pts[order[j]];
      if (b.lat - a.lat > lat_window) break;
      if (haversine_m({a.lat, a.lon}, {b.lat, b.lon}) < d) {
        nb[order[i]].push_back(order[j]);
        nb[order[j]].push_back(order[i]);
      }
    }
  }
  for (auto& list : nb) std::sort(list.begin(), list.end());
  return nb;
}

struct Strata {
  std::vector<std::size_t> of_point;                // stratum id per point
  std::vector<std::vector<std::size_t>> members;    // point ids per stratum
};

Strata build_strata(std::span<const LabeledPoint> pts, bool stratify) {
  Strata s;
  s.members.resize(stratify ? 2 : 1);
  s.of_point.resize(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const std::size_t k = stratify ? static_cast<std::size_t>(pts[i].label) : 0;
    s.of_point[i] = k;
    s.members[k].push_back(i);
  }
  return s;
}

std::mt19937_64 attempt_rng(std::uint64_t seed, int attempt) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(attempt)};
  return std::mt19937_64(seq);
}

}  // namespace

SplitSpec two_way_split(std::uint64_t seed) {
  SplitSpec s;
  s.fractions = {0.8, 0.2, 0.0};
  s.seed = seed;
  return s;
}

SplitSpec three_way_spatial_split(std::uint64_t seed) {
  SplitSpec s;
  s.fractions = {0.5, 0.25, 0.25};
  s.min_distance_m = 30'000.0;
  s.seed = seed;
  return s;
}

SplitCounts allocate_split_counts(std::size_t n, const SplitFractions& f) {
  const std::array<double, 3> frac{f.train, f.validation, f.test};
  std::array<std::size_t, 3> count{};
  std::array<double, 3> rem{};
  std::size_t assigned = 0;
  for (std::size_t k = 0; k < 3; ++k) {
    const double exact = static_cast<double>(n) * frac[k];
    count[k] = static_cast<std::size_t>(std::floor(exact + 1e-9));
    rem[k] = exact - static_cast<double>(count[k]);
    assigned += count[k];
  }
  while (assigned < n) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < 3; ++k)
      if (rem[k] > rem[best] + 1e-12) best = k;
    ++count[best];
    rem[best] = -1.0;
    ++assigned;
  }
  while (assigned > n) {  // only reachable through the 1e-9 nudge
    for (std::size_t k = 3; k-- > 0;)
      if (count[k] > 0 && assigned > n) {
        --count[k];
        --assigned;
      }
  }
  return {count[0], count[1], count[2]};
}

std::vector<SplitTag> stratified_spatial_split(std::span<const LabeledPoint> points,
                                               const SplitSpec& spec) {
  const auto& f = spec.fractions;
  for (double v : {f.train, f.validation, f.test}) {
    if (v < 0.0 || v > 1.0) throw InvalidArgument("split fractions must lie in [0, 1]");
  }
  if (std::abs(f.train + f.validation + f.test - 1.0) > 1e-9) {
    throw InvalidArgument("split fractions must sum to 1");
  }
  if (spec.min_distance_m < 0.0) throw InvalidArgument("min_distance_m must be >= 0");
  if (points.size() < 4) throw InvalidArgument("splitting needs at least 4 points");

  const Strata strata = build_strata(points, spec.stratify);
  std::vector<SplitCounts> quota;
  for (const auto& m : strata.members) quota.push_back(allocate_split_counts(m.size(), f));

  const bool constrained = spec.min_distance_m > 0.0 && f.test > 0.0 && f.validation > 0.0;

  if (!constrained) {
    auto rng = attempt_rng(spec.seed, 0);
    std::vector<SplitTag> out(points.size(), SplitTag::train);
    for (std::size_t k = 0; k < strata.members.size(); ++k) {
      std::vector<std::size_t> ids = strata.members[k];
      std::shuffle(ids.begin(), ids.end(), rng);
      for (std::size_t i = 0; i < ids.size(); ++i) {
        if (i < quota[k].test) out[ids[i]] = SplitTag::test;
        else if (i < quota[k].test + quota[k].validation) out[ids[i]] = SplitTag::validation;
      }
    }
    return out;
  }

  const auto nb = neighbour_lists(points, spec.min_distance_m);
  std::size_t total_test = 0;
  for (const auto& q : quota) total_test += q.test;
  double cluster_cap = std::max(1.0, std::ceil(std::sqrt(static_cast<double>(total_test))));

  std::vector<std::size_t> last_shortfall(strata.members.size(), 0);
  for (int attempt = 0; attempt < spec.max_attempts; ++attempt) {
    auto rng = attempt_rng(spec.seed, attempt);
    const auto cap = static_cast<std::size_t>(cluster_cap);
    std::vector<SplitTag> out(points.size(), SplitTag::unsplit);

    // Test: compact clusters grown breadth-first over the neighbour graph.
    std::vector<std::size_t> test_left;
    for (const auto& q : quota) test_left.push_back(q.test);
    std::size_t remaining = total_test;
    std::vector<std::size_t> order(points.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<char> visited(points.size(), 0);
    for (std::size_t seed_pt : order) {
      if (remaining == 0) break;
      if (visited[seed_pt] || test_left[strata.of_point[seed_pt]] == 0) continue;
      std::vector<std::size_t> queue{seed_pt};
      visited[seed_pt] = 1;
      std::size_t grown = 0;
      for (std::size_t head = 0; head < queue.size() && grown < cap && remaining > 0; ++head) {
        const std::size_t u = queue[head];
        std::size_t& left = test_left[strata.of_point[u]];
        if (left == 0) continue;
        out[u] = SplitTag::test;
        --left;
        --remaining;
        ++grown;
        for (std::size_t v : nb[u]) {
          if (!visited[v]) {
            visited[v] = 1;
            queue.push_back(v);
          }
        }
      }
      // Unclaimed frontier points may seed later clusters.
      for (std::size_t u : queue)
        if (out[u] != SplitTag::test) visited[u] = 0;
    }

    // Validation: random draw among points with no test neighbour.
    std::vector<char> near_test(points.size(), 0);
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (out[i] != SplitTag::test) continue;
      for (std::size_t v : nb[i]) near_test[v] = 1;
    }
    std::vector<std::size_t> val_left;
    for (const auto& q : quota) val_left.push_back(q.validation);
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t i : order) {
      if (out[i] != SplitTag::unsplit || near_test[i]) continue;
      std::size_t& left = val_left[strata.of_point[i]];
      if (left == 0) continue;
      out[i] = SplitTag::validation;
      --left;
    }

    const bool ok = remaining == 0 &&
                    std::all_of(val_left.begin(), val_left.end(), [](std::size_t v) { return v == 0; });
    if (ok) {
      for (std::size_t i = 0; i < points.size(); ++i) {
        if (out[i] != SplitTag::unsplit) continue;
        out[i] = (spec.buffer_train && near_test[i]) ? SplitTag::unsplit : SplitTag::train;
      }
      return out;
    }
    last_shortfall = val_left;
    cluster_cap = std::min(static_cast<double>(total_test), cluster_cap * 1.5);
  }

  std::string diag;
  for (std::size_t k = 0; k < last_shortfall.size(); ++k) {
    diag += " stratum " + std::to_string(k) + " short " + std::to_string(last_shortfall[k]) +
            " validation points;";
  }
  throw SplitError("split constraint unsatisfiable after " + std::to_string(spec.max_attempts) +
                   " attempts (min_distance_m=" + std::to_string(spec.min_distance_m) + "):" + diag);
}

std::vector<std::size_t> indices_with_tag(std::span<const SplitTag> assignment, SplitTag tag) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < assignment.size(); ++i)
    if (assignment[i] == tag) out.push_back(i);
  return out;
}

void write_split_csv(std::span<const std::size_t> point_indices,
                     std::span<const SplitTag> assignment, const std::filesystem::path& path) {
  if (point_indices.size() != assignment.size()) {
    throw InvalidArgument("write_split_csv: index and assignment lengths differ");
  }
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write split file " + path.string());
  out << "index,split\n";
  for (std::size_t i = 0; i < assignment.size(); ++i)
    out << point_indices[i] << ',' << data::to_string(assignment[i]) << '\n';
  if (!out) throw FormatError("I/O failure writing " + path.string());
}

std::vector<SplitRow> read_split_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open split file " + path.string());
  std::string line;
  if (!data::read_csv_line(in, line) || data::trim(line) != "index,split") {
    throw FormatError(path.string() + ": expected header 'index,split'");
  }
  std::vector<SplitRow> rows;
  std::size_t row = 1;
  while (data::read_csv_line(in, line)) {
    ++row;
    const auto fields = data::split_csv_line(line);
    const auto idx = fields.size() == 2 ? data::parse_integer(fields[0]) : std::nullopt;
    if (!idx || *idx < 0) throw FormatError(path.string() + ": bad row " + std::to_string(row));
    rows.push_back({static_cast<std::size_t>(*idx), data::parse_split_tag(data::trim(fields[1]))});
  }
  return rows;
}

}  // namespace cropmap::dataset
