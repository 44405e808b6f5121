#include "cropmap/data/feature_container.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "cropmap/error.hpp"

namespace cropmap::data {

namespace {

constexpr char kMagic[4] = {'C', 'L', 'R', 'N'};

class ByteWriter {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    buf_.insert(buf_.end(), b, b + n);
  }
  void u8(std::uint8_t v) { buf_.push_back(v); }
  void u16(std::uint16_t v) {
    for (int i = 0; i < 2; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  const std::vector<std::uint8_t>& buffer() const { return buf_; }

 private:
  std::vector<std::uint8_t> buf_;
};

class ByteReader {
 public:
  ByteReader(std::vector<std::uint8_t> data, std::string source)
      : data_(std::move(data)), source_(std::move(source)) {}

  void need(std::size_t n) const {
    if (pos_ + n > data_.size()) {
      throw FormatError(source_ + ": truncated feature container at byte " + std::to_string(pos_));
    }
  }
  std::uint8_t u8() {
    need(1);
    return data_[pos_++];
  }
  std::uint16_t u16() {
    need(2);
    std::uint16_t v = static_cast<std::uint16_t>(data_[pos_] | (data_[pos_ + 1] << 8));
    pos_ += 2;
    return v;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(data_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  std::string str(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(data_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  bool at_end() const { return pos_ == data_.size(); }
  const std::string& source() const { return source_; }

 private:
  std::vector<std::uint8_t> data_;
  std::string source_;
  std::size_t pos_ = 0;
};

std::vector<std::uint8_t> slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open feature container " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

std::vector<PixelTimeSeries> read_feature_series(const std::filesystem::path& path) {
  ByteReader r(slurp(path), path.string());
  if (r.str(4) != std::string(kMagic, 4)) throw FormatError(r.source() + ": bad magic");
  const auto version = r.u16();
  if (version != kContainerVersion) {
    throw FormatError(r.source() + ": unsupported container version " + std::to_string(version));
  }
  const std::uint32_t n = r.u32();
  const auto months = r.u16();
  const auto channels = r.u16();
  if (months != kMonths || channels != kChannels) {
    throw FormatError(r.source() + ": schema mismatch, expected T=12 C=18, got T=" +
                      std::to_string(months) + " C=" + std::to_string(channels));
  }
  const auto& schema = FeatureSchema::standard();
  for (std::size_t c = 0; c < kChannels; ++c) {
    const std::string name = r.str(r.u16());
    if (name != schema[c].name) {
      throw FormatError(r.source() + ": channel " + std::to_string(c) + " is '" + name +
                        "', expected '" + std::string(schema[c].name) + "'");
    }
  }

  std::vector<PixelTimeSeries> out(n);
  for (std::uint32_t s = 0; s < n; ++s) {
    PixelTimeSeries& ps = out[s];
    for (std::size_t k = 0; k < kSeriesValues; ++k) ps.values[k] = r.f32();
    for (std::size_t b = 0; b < kMaskBytes; ++b) {
      const std::uint8_t byte = r.u8();
      for (std::size_t bit = 0; bit < 8; ++bit) {
        const std::size_t k = b * 8 + bit;
        if (k < kSeriesValues && ((byte >> bit) & 1u)) ps.missing.set(k);
      }
    }
    try {
      validate_series(ps);
    } catch (const InvalidArgument& e) {
      throw FormatError(r.source() + ": sample " + std::to_string(s) + ": " + e.what());
    }
  }
  if (!r.at_end()) throw FormatError(r.source() + ": trailing bytes after last sample");
  return out;
}

Dataset read_feature_container(const std::filesystem::path& path,
                               std::vector<LabeledPoint> labels) {
  return make_dataset(std::move(labels), read_feature_series(path));
}

void write_feature_container(std::span<const PixelTimeSeries> series,
                             const std::filesystem::path& path) {
  if (series.empty()) throw InvalidArgument("refusing to write an empty feature container");
  for (const auto& s : series) validate_series(s);

  ByteWriter w;
  w.bytes(kMagic, 4);
  w.u16(kContainerVersion);
  w.u32(static_cast<std::uint32_t>(series.size()));
  w.u16(static_cast<std::uint16_t>(kMonths));
  w.u16(static_cast<std::uint16_t>(kChannels));
  for (const auto& ch : FeatureSchema::standard().channels()) {
    w.u16(static_cast<std::uint16_t>(ch.name.size()));
    w.bytes(ch.name.data(), ch.name.size());
  }
  for (const auto& s : series) {
    for (float v : s.values) w.f32(v);
    for (std::size_t b = 0; b < kMaskBytes; ++b) {
      std::uint8_t byte = 0;
      for (std::size_t bit = 0; bit < 8; ++bit) {
        const std::size_t k = b * 8 + bit;
        if (k < kSeriesValues && s.missing[k]) byte |= static_cast<std::uint8_t>(1u << bit);
      }
      w.u8(byte);
    }
  }

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write feature container " + path.string());
  out.write(reinterpret_cast<const char*>(w.buffer().data()),
            static_cast<std::streamsize>(w.buffer().size()));
  if (!out) throw FormatError("I/O failure writing " + path.string());
}

void write_feature_container(const Dataset& dataset, const std::filesystem::path& path) {
  write_feature_container(std::span<const PixelTimeSeries>(dataset.series), path);
}

}  // namespace cropmap::data
