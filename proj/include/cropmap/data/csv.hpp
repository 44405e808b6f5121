#pragma once

#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cropmap::data {

/// Splits one CSV record. Handles double-quoted fields with "" escapes;
/// embedded newlines are not supported.
std::vector<std::string> split_csv_line(std::string_view line);

/// Reads the next non-empty line, stripping a trailing '\r'.
bool read_csv_line(std::istream& in, std::string& line);

std::optional<double> parse_double(std::string_view text);
std::optional<long long> parse_integer(std::string_view text);
std::string_view trim(std::string_view text);

/// Formats a double with enough digits to round-trip exactly.
std::string format_double(double v);

}  // namespace cropmap::data
