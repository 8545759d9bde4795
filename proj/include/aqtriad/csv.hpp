#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace aqtriad::csv {

struct Row {
  std::size_t line = 0;  ///< 1-based line number in the source file
  std::vector<std::string> cells;
};

/// Plain comma-separated table: first line is the header, no quoting.
struct Table {
  std::vector<std::string> header;
  std::vector<Row> rows;

  /// Column index by name, or nullopt.
  std::optional<std::size_t> column(std::string_view name) const;
};

Table read(const std::filesystem::path& path);
Table parse(std::string_view text, std::string_view source_name);

std::vector<std::string> split_line(std::string_view line);

/// Empty cells and the `-999` sentinel are missing values.
bool is_missing(std::string_view cell);

/// Strict double parse; throws Parse with `context` in the message.
double to_double(std::string_view cell, std::string_view context);
long long to_int(std::string_view cell, std::string_view context);

/// Fixed-point text for writing; `-0.000` is normalized to `0.000`.
std::string fixed(double value, int decimals);

}  // namespace aqtriad::csv
