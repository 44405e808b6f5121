#include "cropmap/mapping/grid_io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include <json.hpp>

#include "cropmap/error.hpp"

namespace cropmap::mapping {

static_assert(std::endian::native == std::endian::little, "grid I/O assumes a little-endian host");

using nlohmann::ordered_json;

namespace {

constexpr char kMagic[4] = {'C', 'L', 'M', 'P'};
constexpr std::size_t kHeaderBytes = 4 + 2 + 1 + 4 + 4;

template <typename T>
void put(std::string& buf, T v) {
  char bytes[sizeof(T)];
  std::memcpy(bytes, &v, sizeof(T));
  buf.append(bytes, sizeof(T));
}

template <typename T>
T get(const std::string& buf, std::size_t offset) {
  T v;
  std::memcpy(&v, buf.data() + offset, sizeof(T));
  return v;
}

void write_bytes(const std::filesystem::path& path, GridType type, std::uint32_t width,
                 std::uint32_t height, const void* payload, std::size_t payload_bytes) {
  std::string buf(kMagic, 4);
  put<std::uint16_t>(buf, kGridVersion);
  put<std::uint8_t>(buf, static_cast<std::uint8_t>(type));
  put<std::uint32_t>(buf, width);
  put<std::uint32_t>(buf, height);
  buf.append(static_cast<const char*>(payload), payload_bytes);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write grid " + path.string());
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw FormatError("I/O failure writing " + path.string());
}

void check_size(std::uint32_t width, std::uint32_t height, std::size_t n) {
  if (static_cast<std::size_t>(width) * height != n) {
    throw InvalidArgument("grid of " + std::to_string(width) + "x" + std::to_string(height) + " given " +
                          std::to_string(n) + " values");
  }
}

std::string_view type_name(GridType t) { return t == GridType::float32 ? "float32" : "uint8"; }

}  // namespace

void validate_geotransform(const GeoTransform& geo) {
  if (!std::isfinite(geo.origin_lon) || !std::isfinite(geo.origin_lat) || std::abs(geo.origin_lat) > 90.0 ||
      std::abs(geo.origin_lon) > 180.0) {
    throw InvalidArgument("geotransform origin is not a valid coordinate");
  }
  if (!(geo.pixel_size_deg > 0.0) || !std::isfinite(geo.pixel_size_deg)) {
    throw InvalidArgument("geotransform pixel size must be positive");
  }
}

void write_grid(const std::filesystem::path& path, std::uint32_t width, std::uint32_t height,
                std::span<const float> values) {
  check_size(width, height, values.size());
  write_bytes(path, GridType::float32, width, height, values.data(), values.size_bytes());
}

void write_grid(const std::filesystem::path& path, std::uint32_t width, std::uint32_t height,
                std::span<const std::uint8_t> values) {
  check_size(width, height, values.size());
  write_bytes(path, GridType::uint8, width, height, values.data(), values.size_bytes());
}

Grid read_grid(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open grid " + path.string());
  const std::string buf{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  if (buf.size() < kHeaderBytes || std::memcmp(buf.data(), kMagic, 4) != 0) {
    throw FormatError(path.string() + " is not a CLMP grid");
  }
  if (const auto v = get<std::uint16_t>(buf, 4); v != kGridVersion) {
    throw FormatError(path.string() + ": unsupported grid version " + std::to_string(v));
  }
  Grid g;
  const auto code = get<std::uint8_t>(buf, 6);
  if (code != 1 && code != 2) throw FormatError(path.string() + ": unknown dtype code " + std::to_string(code));
  g.type = static_cast<GridType>(code);
  g.width = get<std::uint32_t>(buf, 7);
  g.height = get<std::uint32_t>(buf, 11);
  const std::size_t n = static_cast<std::size_t>(g.width) * g.height;
  const std::size_t elem = g.type == GridType::float32 ? sizeof(float) : 1;
  if (buf.size() != kHeaderBytes + n * elem) {
    throw FormatError(path.string() + ": payload size does not match " + std::to_string(g.width) + "x" +
                      std::to_string(g.height));
  }
  if (g.type == GridType::float32) {
    g.f32.resize(n);
    std::memcpy(g.f32.data(), buf.data() + kHeaderBytes, n * elem);
  } else {
    g.u8.assign(buf.begin() + kHeaderBytes, buf.end());
  }
  return g;
}

void write_sidecar(const GridSidecar& s, const std::filesystem::path& path) {
  ordered_json j{{"tile_id", s.tile_id},
                 {"width", s.width},
                 {"height", s.height},
                 {"origin_lon", s.geo.origin_lon},
                 {"origin_lat", s.geo.origin_lat},
                 {"pixel_size_deg", s.geo.pixel_size_deg},
                 {"dtype", type_name(s.type)},
                 {"nodata", s.nodata},
                 {"threshold", s.threshold}};
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write sidecar " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw FormatError("I/O failure writing " + path.string());
}

GridSidecar read_sidecar(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open sidecar " + path.string());
  try {
    const auto j = ordered_json::parse(in);
    GridSidecar s;
    s.tile_id = j.at("tile_id").get<std::string>();
    s.width = j.at("width").get<std::uint32_t>();
    s.height = j.at("height").get<std::uint32_t>();
    s.geo = {j.at("origin_lon").get<double>(), j.at("origin_lat").get<double>(),
             j.at("pixel_size_deg").get<double>()};
    const auto dtype = j.at("dtype").get<std::string>();
    if (dtype != "float32" && dtype != "uint8") throw FormatError(path.string() + ": unknown dtype " + dtype);
    s.type = dtype == "float32" ? GridType::float32 : GridType::uint8;
    s.nodata = j.at("nodata").get<double>();
    s.threshold = j.at("threshold").get<double>();
    return s;
  } catch (const ordered_json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace cropmap::mapping
