#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "aqtriad/station_registry.hpp"
#include "aqtriad/timeutil.hpp"

namespace aqtriad {

enum class Pollutant { Ozone, Pm25 };

Pollutant parse_pollutant(std::string_view text);
const char* to_string(Pollutant p);

/// Forecast variable names, in the canonical column order for the mode.
/// Ozone: ozone, temperature, ground_radiation, pbl_height, wind_direction,
/// wind_speed, nox, noy, time_of_day. PM2.5: pm25, ground_radiation,
/// wind_direction, wind_speed, time_of_day, rc_rn.
std::span<const std::string_view> variable_names(Pollutant p);
std::size_t variable_count(Pollutant p);
/// Index of `name` in variable_names(p); throws Schema if absent.
std::size_t variable_index(Pollutant p, std::string_view name);
/// The forecast's own concentration variable (ozone or pm25).
inline std::size_t pollutant_variable(Pollutant) { return 0; }

/// Hourly concentrations for one station on a contiguous hour grid.
struct ObservationSeries {
  std::string station_id;
  HourStamp start_time = 0;
  std::vector<double> values;
  std::vector<std::uint8_t> valid;

  std::size_t size() const { return values.size(); }
  std::size_t valid_count() const;
  /// Observation at absolute hour `t` when inside the grid and valid.
  std::optional<double> at(HourStamp t) const;
};

/// One station's 48 hourly feature vectors, flattened hour-major.
struct StationForecast {
  std::vector<double> values;  ///< kForecastFileHours * variable_count
  std::array<bool, kForecastFileHours> valid{};

  std::span<const double> hour(int h, std::size_t vars) const {
    return {values.data() + static_cast<std::size_t>(h) * vars, vars};
  }
};

struct ForecastFile {
  Date issue_date{};
  Pollutant pollutant = Pollutant::Ozone;
  std::map<std::string, StationForecast> per_station;

  HourStamp start_time() const { return hour_stamp(issue_date, kForecastStartHourUtc); }
  std::size_t vars() const { return variable_count(pollutant); }
  const StationForecast* find(const std::string& id) const;
};

/// Stations present in metadata, observations and every forecast file.
struct AlignedDataset {
  StationRegistry registry;
  std::map<std::string, ObservationSeries> observations;
  std::vector<ForecastFile> forecasts;  ///< strictly increasing issue_date
  Pollutant pollutant = Pollutant::Ozone;

  const ForecastFile* forecast_for(Date d) const;
};

/// `station_id,timestamp_utc,value`; empty or -999 means invalid. Gaps in the
/// hour grid are filled as invalid hours.
std::map<std::string, ObservationSeries> load_observations(const std::filesystem::path& path, Pollutant pollutant);

/// `station_id,hour_index,<variables>`; missing station hours are invalid.
ForecastFile load_forecast_file(const std::filesystem::path& path, Pollutant pollutant, Date issue_date);
/// Infers the issue date from a `forecast_YYYY-MM-DD.csv` file name.
ForecastFile load_forecast_file(const std::filesystem::path& path, Pollutant pollutant);
std::optional<Date> issue_date_from_filename(const std::filesystem::path& path);
/// All `forecast_*.csv` files in `dir`, sorted by issue date.
std::vector<ForecastFile> load_forecast_dir(const std::filesystem::path& dir, Pollutant pollutant);

AlignedDataset align(const StationRegistry& registry, std::map<std::string, ObservationSeries> observations,
                     std::vector<ForecastFile> forecasts);

}  // namespace aqtriad
