#pragma once

#include <chrono>
#include <cstdint>
#include <string>
#include <string_view>

namespace aqtriad {

using Date = std::chrono::sys_days;

/// Whole hours since 1970-01-01T00:00Z.
using HourStamp = std::int64_t;

/// Forecast files are issued for 13:00 GMT on their issue date.
inline constexpr int kForecastStartHourUtc = 13;
inline constexpr int kForecastFileHours = 48;

/// Parses `YYYY-MM-DD`. Throws Parse on anything else.
Date parse_date(std::string_view text);
std::string format_date(Date d);

/// Accepts `YYYY-MM-DDTHH:MM[:SS][Z]` or the same with a space separator.
/// Minutes and seconds must be zero.
HourStamp parse_hour_stamp(std::string_view text);
std::string format_hour_stamp(HourStamp h);

inline HourStamp hour_stamp(Date d, int hour_of_day) {
  return static_cast<HourStamp>(d.time_since_epoch().count()) * 24 + hour_of_day;
}

/// Absolute hour of forecast hour `h` in the file issued on `issue`.
inline HourStamp forecast_hour_stamp(Date issue, int h) {
  return hour_stamp(issue, kForecastStartHourUtc) + h;
}

inline int hour_of_day(HourStamp h) {
  auto r = static_cast<int>(h % 24);
  return r < 0 ? r + 24 : r;
}

inline unsigned month_of(Date d) {
  return static_cast<unsigned>(std::chrono::year_month_day{d}.month());
}

}  // namespace aqtriad
