#pragma once

#include <chrono>
#include <filesystem>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "cropmap/data/schema.hpp"

namespace cropmap::data {

/// Reads a label table CSV with header columns
/// lat, lon, date, label, crop_probability, dataset_id, is_local
/// (one of label / crop_probability may be absent). Rows with only a
/// probability are binarized at 0.5. Errors carry the 1-based row number.
std::vector<LabeledPoint> read_label_table(const std::filesystem::path& path);

void write_label_table(std::span<const LabeledPoint> points, const std::filesystem::path& path);

std::optional<std::chrono::year_month_day> parse_iso_date(std::string_view text);
std::string format_iso_date(std::chrono::year_month_day date);

}  // namespace cropmap::data
