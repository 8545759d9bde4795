#include "aqtriad/csv.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "aqtriad/errors.hpp"

namespace aqtriad::csv {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace

std::optional<std::size_t> Table::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  return std::nullopt;
}

std::vector<std::string> split_line(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    const auto piece = line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
    out.emplace_back(trim(piece));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

Table parse(std::string_view text, std::string_view source_name) {
  Table table;
  std::size_t line_no = 0;
  bool have_header = false;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    auto line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    ++line_no;
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    if (trim(line).empty()) continue;
    if (!have_header) {
      if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.remove_prefix(3);  // BOM
      table.header = split_line(line);
      have_header = true;
      continue;
    }
    Row row{line_no, split_line(line)};
    if (row.cells.size() != table.header.size()) {
      std::ostringstream msg;
      msg << source_name << " row " << line_no << ": expected " << table.header.size()
          << " cells, found " << row.cells.size();
      fail(ErrorKind::Parse, msg.str());
    }
    table.rows.push_back(std::move(row));
  }
  if (!have_header) fail(ErrorKind::Parse, std::string(source_name) + ": missing header line");
  return table;
}

Table read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.filename().string());
}

bool is_missing(std::string_view cell) {
  cell = trim(cell);
  return cell.empty() || cell == "-999" || cell == "-999.0" || cell == "-999.00";
}

double to_double(std::string_view cell, std::string_view context) {
  cell = trim(cell);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (ec != std::errc{} || ptr != cell.data() + cell.size() || !std::isfinite(value)) {
    fail(ErrorKind::Parse, std::string(context) + ": not a number: '" + std::string(cell) + "'");
  }
  return value;
}

long long to_int(std::string_view cell, std::string_view context) {
  cell = trim(cell);
  long long value = 0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (ec != std::errc{} || ptr != cell.data() + cell.size()) {
    fail(ErrorKind::Parse, std::string(context) + ": not an integer: '" + std::string(cell) + "'");
  }
  return value;
}

std::string fixed(double value, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, value);
  std::string s = buf;
  if (s.front() == '-' && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
  return s;
}

}  // namespace aqtriad::csv
