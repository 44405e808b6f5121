#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace cropmap::mapping {

inline constexpr float kProbabilityNodata = -9999.0f;
inline constexpr std::uint8_t kBinaryNodata = 255;
inline constexpr std::uint16_t kGridVersion = 1;

enum class GridType : std::uint8_t { float32 = 1, uint8 = 2 };

/// Top-left corner of the top-left pixel; rows run south, columns east.
struct GeoTransform {
  double origin_lon = 0.0;
  double origin_lat = 0.0;
  double pixel_size_deg = 0.0;

  friend bool operator==(const GeoTransform&, const GeoTransform&) = default;
};

/// Throws InvalidArgument unless the origin is a valid coordinate and the
/// pixel size is positive and finite.
void validate_geotransform(const GeoTransform& geo);

/// In-memory form of a CLMP grid file:
///
///   "CLMP" | u16 version | u8 dtype (1=float32, 2=uint8) | u32 width |
///   u32 height | row-major payload, little-endian
struct Grid {
  GridType type = GridType::float32;
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::vector<float> f32;
  std::vector<std::uint8_t> u8;
};

void write_grid(const std::filesystem::path& path, std::uint32_t width, std::uint32_t height,
                std::span<const float> values);
void write_grid(const std::filesystem::path& path, std::uint32_t width, std::uint32_t height,
                std::span<const std::uint8_t> values);
Grid read_grid(const std::filesystem::path& path);

struct GridSidecar {
  std::string tile_id;
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  GeoTransform geo;
  GridType type = GridType::float32;
  double nodata = 0.0;
  double threshold = 0.5;
};

void write_sidecar(const GridSidecar& sidecar, const std::filesystem::path& path);
GridSidecar read_sidecar(const std::filesystem::path& path);

}  // namespace cropmap::mapping
