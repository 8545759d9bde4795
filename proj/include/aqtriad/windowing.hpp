#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "aqtriad/series_ingest.hpp"
#include "aqtriad/timeutil.hpp"

namespace aqtriad {

/// Window span `n`: each input window holds hours i..i+n inclusive (n+1 vectors).
struct WindowConfig {
  int n = 12;
  int file_len = kForecastFileHours;

  int steps() const { return n + 1; }
  /// Throws Argument unless 1 <= n <= file_len-1 and 2n <= file_len.
  void validate() const;
  int mid_offset() const { return (n + 1) / 2; }  ///< ceil(n/2)
};

enum class Role { Pre = 0, Mid = 1, End = 2 };
inline constexpr Role kRoles[] = {Role::Pre, Role::Mid, Role::End};

const char* to_string(Role r);
Role parse_role(const std::string& text);

struct TriadSample {
  std::string station_id;
  Date issue_date{};
  int start_hour = 0;
  Role role = Role::Pre;
  double target = 0.0;
  int target_file_hour = 0;
  HourStamp target_hour = 0;
  bool reversed = false;
  /// steps() feature vectors of the file's variables, hour-major.
  std::vector<double> window;
};

struct WindowStats {
  std::size_t positions = 0;         ///< window start positions examined
  std::size_t invalid_forecast = 0;  ///< positions dropped for an invalid forecast hour
  std::size_t invalid_target = 0;    ///< role samples dropped for an invalid observation
  std::size_t emitted = 0;
};

/// Slides the window over one station's 48-hour file only. For each start i
/// with all n+1 forecast hours valid, emits Pre/Mid/End samples targeting
/// hours i, i+ceil(n/2), i+n when the matching observation is valid.
/// Windows are stored in file order (not reversed).
std::vector<TriadSample> triad_windows(const ForecastFile& file, const ObservationSeries& obs, const WindowConfig& cfg,
                                       WindowStats* stats = nullptr);

/// Pre for hour < n, End for hour >= file_len - n, Mid otherwise.
Role correction_role(int hour, const WindowConfig& cfg);

struct InferenceWindow {
  int start = 0;
  Role role = Role::Pre;
  bool reversed = false;
};

/// Window used to correct `hour`: Pre starts at the hour and is fed
/// backwards, Mid starts ceil(n/2) earlier, End ends at the hour.
InferenceWindow inference_window(int hour, const WindowConfig& cfg);

/// Reverses the order of `vars`-wide time steps.
std::vector<double> reverse_window(std::span<const double> window, std::size_t vars);

struct DateSplit {
  std::vector<Date> train;
  std::vector<Date> test;
  std::vector<Date> excluded;  ///< December issue dates
};

/// Holdout dates must exist in the dataset and may not fall in December.
DateSplit holdout_split(const AlignedDataset& dataset, const std::vector<Date>& holdout_dates);

/// The fixed ozone evaluation days used for the 2019 experiments.
std::vector<Date> reference_holdout_dates_2019();

/// Debug dump: station_id,issue_date,start_hour,role,target_hour,target.
void write_sample_dump(const std::filesystem::path& path, std::span<const TriadSample> samples);

}  // namespace aqtriad
