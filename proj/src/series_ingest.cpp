#include "aqtriad/series_ingest.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <regex>
#include <set>
#include <sstream>

#include "aqtriad/csv.hpp"
#include "aqtriad/errors.hpp"

namespace aqtriad {
namespace {

constexpr std::array<std::string_view, 9> kOzoneVars{
    "ozone", "temperature", "ground_radiation", "pbl_height", "wind_direction",
    "wind_speed", "nox", "noy", "time_of_day"};
constexpr std::array<std::string_view, 6> kPm25Vars{
    "pm25", "ground_radiation", "wind_direction", "wind_speed", "time_of_day", "rc_rn"};

}  // namespace

Pollutant parse_pollutant(std::string_view text) {
  if (text == "ozone" || text == "o3") return Pollutant::Ozone;
  if (text == "pm25" || text == "pm2.5") return Pollutant::Pm25;
  fail(ErrorKind::Argument, "unknown pollutant '" + std::string(text) + "'");
}

const char* to_string(Pollutant p) { return p == Pollutant::Ozone ? "ozone" : "pm25"; }

std::span<const std::string_view> variable_names(Pollutant p) {
  if (p == Pollutant::Ozone) return kOzoneVars;
  return kPm25Vars;
}

std::size_t variable_count(Pollutant p) { return variable_names(p).size(); }

std::size_t variable_index(Pollutant p, std::string_view name) {
  const auto names = variable_names(p);
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) {
    fail(ErrorKind::Schema, "variable '" + std::string(name) + "' not in " + to_string(p) + " mode");
  }
  return static_cast<std::size_t>(it - names.begin());
}

std::size_t ObservationSeries::valid_count() const {
  return static_cast<std::size_t>(std::count(valid.begin(), valid.end(), std::uint8_t{1}));
}

std::optional<double> ObservationSeries::at(HourStamp t) const {
  if (t < start_time) return std::nullopt;
  const auto i = static_cast<std::size_t>(t - start_time);
  if (i >= values.size() || !valid[i]) return std::nullopt;
  return values[i];
}

const StationForecast* ForecastFile::find(const std::string& id) const {
  const auto it = per_station.find(id);
  return it == per_station.end() ? nullptr : &it->second;
}

const ForecastFile* AlignedDataset::forecast_for(Date d) const {
  const auto it = std::lower_bound(forecasts.begin(), forecasts.end(), d,
                                   [](const ForecastFile& f, Date x) { return f.issue_date < x; });
  return it != forecasts.end() && it->issue_date == d ? &*it : nullptr;
}

std::map<std::string, ObservationSeries> load_observations(const std::filesystem::path& path, Pollutant) {
  const auto table = csv::read(path);
  const std::vector<std::string> expected{"station_id", "timestamp_utc", "value"};
  if (table.header != expected) {
    fail(ErrorKind::Schema, path.filename().string() + ": header must be station_id,timestamp_utc,value");
  }

  struct Cell {
    HourStamp t;
    double value;
    bool valid;
  };
  std::map<std::string, std::vector<Cell>> grouped;
  for (const auto& row : table.rows) {
    std::ostringstream ctx;
    ctx << path.filename().string() << " row " << row.line;
    if (row.cells[0].empty()) fail(ErrorKind::Parse, ctx.str() + ": empty station_id");
    const HourStamp t = parse_hour_stamp(row.cells[1]);
    Cell c{t, 0.0, false};
    if (!csv::is_missing(row.cells[2])) {
      c.value = csv::to_double(row.cells[2], ctx.str());
      if (c.value < 0.0) fail(ErrorKind::Validation, ctx.str() + ": negative concentration marked valid");
      c.valid = true;
    }
    grouped[row.cells[0]].push_back(c);
  }

  std::map<std::string, ObservationSeries> out;
  for (auto& [id, cells] : grouped) {
    std::sort(cells.begin(), cells.end(), [](const Cell& a, const Cell& b) { return a.t < b.t; });
    ObservationSeries s;
    s.station_id = id;
    s.start_time = cells.front().t;
    const auto len = static_cast<std::size_t>(cells.back().t - s.start_time + 1);
    s.values.assign(len, 0.0);
    s.valid.assign(len, 0);
    for (std::size_t k = 0; k < cells.size(); ++k) {
      if (k > 0 && cells[k].t == cells[k - 1].t) {
        fail(ErrorKind::Parse, "station " + id + ": duplicate timestamp " + format_hour_stamp(cells[k].t));
      }
      const auto i = static_cast<std::size_t>(cells[k].t - s.start_time);
      s.values[i] = cells[k].value;
      s.valid[i] = cells[k].valid ? 1 : 0;
    }
    out.emplace(id, std::move(s));
  }
  return out;
}

ForecastFile load_forecast_file(const std::filesystem::path& path, Pollutant pollutant, Date issue_date) {
  const auto table = csv::read(path);
  const auto fname = path.filename().string();
  if (table.header.size() < 2 || table.header[0] != "station_id" || table.header[1] != "hour_index") {
    fail(ErrorKind::Schema, fname + ": header must start with station_id,hour_index");
  }
  const std::size_t vars = variable_count(pollutant);
  std::vector<std::size_t> column_to_var;
  std::set<std::size_t> seen;
  for (std::size_t c = 2; c < table.header.size(); ++c) {
    const auto v = variable_index(pollutant, table.header[c]);
    if (!seen.insert(v).second) fail(ErrorKind::Schema, fname + ": duplicate column " + table.header[c]);
    column_to_var.push_back(v);
  }
  if (seen.size() != vars) fail(ErrorKind::Schema, fname + ": missing variable columns for " + to_string(pollutant));
  const std::size_t wind_dir = variable_index(pollutant, "wind_direction");

  ForecastFile file;
  file.issue_date = issue_date;
  file.pollutant = pollutant;
  std::map<std::string, std::array<bool, kForecastFileHours>> present;
  for (const auto& row : table.rows) {
    std::ostringstream ctx;
    ctx << fname << " row " << row.line;
    const auto& id = row.cells[0];
    if (id.empty()) fail(ErrorKind::Parse, ctx.str() + ": empty station_id");
    const auto h = csv::to_int(row.cells[1], ctx.str() + " hour_index");
    if (h < 0 || h >= kForecastFileHours) fail(ErrorKind::Parse, ctx.str() + ": hour_index out of [0,47]");
    auto& sf = file.per_station[id];
    if (sf.values.empty()) sf.values.assign(kForecastFileHours * vars, 0.0);
    auto& seen_hours = present[id];
    if (seen_hours[h]) fail(ErrorKind::Parse, ctx.str() + ": duplicate hour_index for station " + id);
    seen_hours[h] = true;

    bool ok = true;
    for (std::size_t c = 0; c < column_to_var.size(); ++c) {
      const auto& cell = row.cells[c + 2];
      if (csv::is_missing(cell)) {
        ok = false;
        continue;
      }
      const double v = csv::to_double(cell, ctx.str());
      if (column_to_var[c] == wind_dir && !(v >= 0.0 && v < 360.0)) {
        fail(ErrorKind::Validation, ctx.str() + ": wind_direction outside [0,360)");
      }
      sf.values[static_cast<std::size_t>(h) * vars + column_to_var[c]] = v;
    }
    sf.valid[h] = ok;
  }
  return file;
}

std::optional<Date> issue_date_from_filename(const std::filesystem::path& path) {
  static const std::regex pattern(R"(forecast_(\d{4}-\d{2}-\d{2})\.csv)");
  std::smatch m;
  const auto name = path.filename().string();
  if (!std::regex_match(name, m, pattern)) return std::nullopt;
  return parse_date(m[1].str());
}

ForecastFile load_forecast_file(const std::filesystem::path& path, Pollutant pollutant) {
  const auto d = issue_date_from_filename(path);
  if (!d) fail(ErrorKind::Argument, path.filename().string() + ": expected name forecast_YYYY-MM-DD.csv");
  return load_forecast_file(path, pollutant, *d);
}

std::vector<ForecastFile> load_forecast_dir(const std::filesystem::path& dir, Pollutant pollutant) {
  if (!std::filesystem::is_directory(dir)) fail(ErrorKind::Io, "not a directory: " + dir.string());
  std::vector<std::pair<Date, std::filesystem::path>> paths;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    if (auto d = issue_date_from_filename(entry.path())) paths.emplace_back(*d, entry.path());
  }
  std::sort(paths.begin(), paths.end());

  std::vector<ForecastFile> files(paths.size());
  std::vector<std::exception_ptr> errors(paths.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(paths.size()); ++i) {
    try {
      files[i] = load_forecast_file(paths[i].second, pollutant, paths[i].first);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return files;
}

AlignedDataset align(const StationRegistry& registry, std::map<std::string, ObservationSeries> observations,
                     std::vector<ForecastFile> forecasts) {
  if (forecasts.empty()) fail(ErrorKind::Alignment, "no forecast files");
  std::sort(forecasts.begin(), forecasts.end(),
            [](const ForecastFile& a, const ForecastFile& b) { return a.issue_date < b.issue_date; });
  for (std::size_t i = 1; i < forecasts.size(); ++i) {
    if (forecasts[i].issue_date == forecasts[i - 1].issue_date) {
      fail(ErrorKind::Alignment, "duplicate forecast issue date " + format_date(forecasts[i].issue_date));
    }
    if (forecasts[i].pollutant != forecasts[0].pollutant) fail(ErrorKind::Alignment, "mixed pollutant modes");
  }

  AlignedDataset out;
  out.pollutant = forecasts.front().pollutant;
  for (const auto& s : registry.stations()) {
    const auto obs = observations.find(s.station_id);
    if (obs == observations.end()) continue;
    const bool everywhere = std::all_of(forecasts.begin(), forecasts.end(),
                                        [&](const ForecastFile& f) {
                                          // Empty files (outage days) carry no station set.
                                          return f.per_station.empty() || f.find(s.station_id) != nullptr;
                                        });
    if (!everywhere) continue;
    Station kept = s;
    const auto total = obs->second.size();
    kept.missing_fraction = total == 0 ? 1.0 : 1.0 - static_cast<double>(obs->second.valid_count()) / static_cast<double>(total);
    out.registry.add(std::move(kept));
    out.observations.emplace(s.station_id, std::move(obs->second));
  }
  if (out.registry.empty()) fail(ErrorKind::Alignment, "no station appears in metadata, observations and every forecast file");
  out.forecasts = std::move(forecasts);
  return out;
}

}  // namespace aqtriad
