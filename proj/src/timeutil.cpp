#include "aqtriad/timeutil.hpp"

#include <charconv>
#include <cstdio>

#include "aqtriad/errors.hpp"

namespace aqtriad {
namespace {

int parse_fixed(std::string_view text, std::size_t pos, std::size_t len,
                std::string_view whole) {
  int value = 0;
  if (pos + len > text.size()) fail(ErrorKind::Parse, "truncated time value '" + std::string(whole) + "'");
  auto first = text.data() + pos;
  auto [ptr, ec] = std::from_chars(first, first + len, value);
  if (ec != std::errc{} || ptr != first + len) {
    fail(ErrorKind::Parse, "bad digits in time value '" + std::string(whole) + "'");
  }
  return value;
}

}  // namespace

Date parse_date(std::string_view text) {
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') {
    fail(ErrorKind::Parse, "expected YYYY-MM-DD, got '" + std::string(text) + "'");
  }
  using namespace std::chrono;
  const year_month_day ymd{year{parse_fixed(text, 0, 4, text)},
                           month{static_cast<unsigned>(parse_fixed(text, 5, 2, text))},
                           day{static_cast<unsigned>(parse_fixed(text, 8, 2, text))}};
  if (!ymd.ok()) fail(ErrorKind::Parse, "invalid calendar date '" + std::string(text) + "'");
  return sys_days{ymd};
}

std::string format_date(Date d) {
  const std::chrono::year_month_day ymd{d};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

HourStamp parse_hour_stamp(std::string_view text) {
  if (!text.empty() && text.back() == 'Z') text.remove_suffix(1);
  if (text.size() < 13 || (text[10] != 'T' && text[10] != ' ')) {
    fail(ErrorKind::Parse, "expected YYYY-MM-DDTHH:MM:SSZ, got '" + std::string(text) + "'");
  }
  const Date d = parse_date(text.substr(0, 10));
  const int hour = parse_fixed(text, 11, 2, text);
  int minute = 0;
  int second = 0;
  if (text.size() > 13) {
    if (text[13] != ':' || text.size() < 16) fail(ErrorKind::Parse, "bad time '" + std::string(text) + "'");
    minute = parse_fixed(text, 14, 2, text);
    if (text.size() > 16) {
      if (text[16] != ':' || text.size() != 19) fail(ErrorKind::Parse, "bad time '" + std::string(text) + "'");
      second = parse_fixed(text, 17, 2, text);
    }
  }
  if (hour > 23) fail(ErrorKind::Parse, "hour out of range in '" + std::string(text) + "'");
  if (minute != 0 || second != 0) {
    fail(ErrorKind::Parse, "timestamp not aligned to an hour: '" + std::string(text) + "'");
  }
  return hour_stamp(d, hour);
}

std::string format_hour_stamp(HourStamp h) {
  const auto days = (h >= 0 ? h : h - 23) / 24;
  const Date d{std::chrono::days{days}};
  char buf[8];
  std::snprintf(buf, sizeof buf, "%02d", hour_of_day(h));
  return format_date(d) + "T" + buf + ":00:00Z";
}

}  // namespace aqtriad
