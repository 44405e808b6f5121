#include "cropmap/data/label_table.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>

#include "cropmap/data/csv.hpp"
#include "cropmap/error.hpp"

namespace cropmap::data {

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

bool read_csv_line(std::istream& in, std::string& line) {
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!trim(line).empty()) return true;
  }
  return false;
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t");
  return s.substr(first, last - first + 1);
}

std::optional<double> parse_double(std::string_view text) {
  text = trim(text);
  if (text.empty()) return std::nullopt;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) return std::nullopt;
  return v;
}

std::optional<long long> parse_integer(std::string_view text) {
  text = trim(text);
  if (text.empty()) return std::nullopt;
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) return std::nullopt;
  return v;
}

std::string format_double(double v) {
  std::array<char, 64> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

std::optional<std::chrono::year_month_day> parse_iso_date(std::string_view text) {
  text = trim(text);
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
  const auto y = parse_integer(text.substr(0, 4));
  const auto m = parse_integer(text.substr(5, 2));
  const auto d = parse_integer(text.substr(8, 2));
  if (!y || !m || !d) return std::nullopt;
  const std::chrono::year_month_day ymd{std::chrono::year(static_cast<int>(*y)),
                                        std::chrono::month(static_cast<unsigned>(*m)),
                                        std::chrono::day(static_cast<unsigned>(*d))};
  if (!ymd.ok()) return std::nullopt;
  return ymd;
}

std::string format_iso_date(std::chrono::year_month_day date) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(date.year()),
                static_cast<unsigned>(date.month()), static_cast<unsigned>(date.day()));
  return buf;
}

namespace {

std::optional<bool> parse_bool(std::string_view text) {
  text = trim(text);
  if (text == "1" || text == "true" || text == "True" || text == "TRUE") return true;
  if (text == "0" || text == "false" || text == "False" || text == "FALSE") return false;
  return std::nullopt;
}

[[noreturn]] void row_error(std::size_t row, const std::string& what) {
  throw FormatError("label table row " + std::to_string(row) + ": " + what);
}

}  // namespace

std::vector<LabeledPoint> read_label_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open label table " + path.string());

  std::string line;
  if (!read_csv_line(in, line)) throw FormatError("label table " + path.string() + " is empty");
  std::map<std::string, std::size_t, std::less<>> columns;
  {
    auto header = split_csv_line(line);
    // Tolerate a UTF-8 byte-order mark.
    if (!header.empty() && header[0].rfind("\xEF\xBB\xBF", 0) == 0) header[0].erase(0, 3);
    for (std::size_t i = 0; i < header.size(); ++i) columns[std::string(trim(header[i]))] = i;
  }
  for (const char* required : {"lat", "lon", "date", "dataset_id", "is_local"}) {
    if (!columns.contains(required)) {
      throw FormatError("label table " + path.string() + ": missing required column '" +
                        required + "'");
    }
  }
  const bool has_label = columns.contains("label");
  const bool has_prob = columns.contains("crop_probability");
  if (!has_label && !has_prob) {
    throw FormatError("label table " + path.string() +
                      ": needs a 'label' or 'crop_probability' column");
  }

  std::vector<LabeledPoint> points;
  std::size_t row = 1;
  while (read_csv_line(in, line)) {
    ++row;
    const auto fields = split_csv_line(line);
    auto cell = [&](std::string_view name) -> std::string_view {
      const std::size_t idx = columns.find(name)->second;
      if (idx >= fields.size()) row_error(row, "missing field '" + std::string(name) + "'");
      return trim(fields[idx]);
    };

    LabeledPoint p;
    const auto lat = parse_double(cell("lat"));
    const auto lon = parse_double(cell("lon"));
    if (!lat || !lon) row_error(row, "unparseable coordinate");
    if (std::abs(*lat) > 90.0 || std::abs(*lon) > 180.0) {
      row_error(row, "coordinate out of range (" + std::string(cell("lat")) + ", " +
                         std::string(cell("lon")) + ")");
    }
    p.lat = *lat;
    p.lon = *lon;

    const auto date = parse_iso_date(cell("date"));
    if (!date) row_error(row, "unparseable date '" + std::string(cell("date")) + "'");
    p.date = *date;

    std::optional<int> label;
    if (has_label && !cell("label").empty()) {
      const auto v = parse_integer(cell("label"));
      if (!v || (*v != 0 && *v != 1)) row_error(row, "label must be 0 or 1");
      label = static_cast<int>(*v);
    }
    if (has_prob && !cell("crop_probability").empty()) {
      const auto prob = parse_double(cell("crop_probability"));
      if (!prob || *prob < 0.0 || *prob > 1.0) row_error(row, "crop_probability must be in [0, 1]");
      p.source_probability = *prob;
      const int derived = binarize_probability(*prob);
      if (label && *label != derived) {
        row_error(row, "label disagrees with crop_probability at threshold 0.5");
      }
      label = derived;
    }
    if (!label) row_error(row, "neither label nor crop_probability given");
    p.label = *label;

    p.dataset_id = std::string(cell("dataset_id"));
    const auto local = parse_bool(cell("is_local"));
    if (!local) row_error(row, "is_local must be 0/1 or true/false");
    p.is_local = *local;
    points.push_back(std::move(p));
  }
  return points;
}

void write_label_table(std::span<const LabeledPoint> points, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write label table " + path.string());
  out << "lat,lon,date,label,crop_probability,dataset_id,is_local\n";
  for (const auto& p : points) {
    out << format_double(p.lat) << ',' << format_double(p.lon) << ',' << format_iso_date(p.date)
        << ',' << p.label << ',';
    if (p.source_probability) out << format_double(*p.source_probability);
    out << ',' << p.dataset_id << ',' << (p.is_local ? 1 : 0) << '\n';
  }
  if (!out) throw FormatError("I/O failure writing " + path.string());
}

}  // namespace cropmap::data
