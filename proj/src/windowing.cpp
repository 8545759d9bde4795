#include "aqtriad/windowing.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "aqtriad/csv.hpp"
#include "aqtriad/errors.hpp"

namespace aqtriad {

void WindowConfig::validate() const {
  if (n < 1 || n > file_len - 1) fail(ErrorKind::Argument, "window n must lie in [1, file_len-1]");
  if (2 * n > file_len) fail(ErrorKind::Argument, "window n too large: 2n must not exceed file_len");
}

const char* to_string(Role r) {
  switch (r) {
    case Role::Pre: return "pre";
    case Role::Mid: return "mid";
    case Role::End: return "end";
  }
  return "?";
}

Role parse_role(const std::string& text) {
  if (text == "pre") return Role::Pre;
  if (text == "mid") return Role::Mid;
  if (text == "end") return Role::End;
  fail(ErrorKind::Argument, "unknown role '" + text + "'");
}

std::vector<TriadSample> triad_windows(const ForecastFile& file, const ObservationSeries& obs, const WindowConfig& cfg,
                                       WindowStats* stats) {
  cfg.validate();
  WindowStats local;
  std::vector<TriadSample> out;
  const StationForecast* sf = file.find(obs.station_id);
  const std::size_t vars = file.vars();
  const int last_start = cfg.file_len - 1 - cfg.n;
  if (sf != nullptr) {
    for (int i = 0; i <= last_start; ++i) {
      ++local.positions;
      const bool window_ok = std::all_of(sf->valid.begin() + i, sf->valid.begin() + i + cfg.n + 1,
                                         [](bool v) { return v; });
      if (!window_ok) {
        ++local.invalid_forecast;
        continue;
      }
      const std::span<const double> values(sf->values.data() + static_cast<std::size_t>(i) * vars,
                                           static_cast<std::size_t>(cfg.steps()) * vars);
      const int targets[] = {i, i + cfg.mid_offset(), i + cfg.n};
      for (const Role role : kRoles) {
        const int h = targets[static_cast<int>(role)];
        const HourStamp t = forecast_hour_stamp(file.issue_date, h);
        const auto y = obs.at(t);
        if (!y) {
          ++local.invalid_target;
          continue;
        }
        TriadSample s;
        s.station_id = obs.station_id;
        s.issue_date = file.issue_date;
        s.start_hour = i;
        s.role = role;
        s.target = *y;
        s.target_file_hour = h;
        s.target_hour = t;
        s.window.assign(values.begin(), values.end());
        out.push_back(std::move(s));
      }
    }
  }
  local.emitted = out.size();
  if (stats != nullptr) {
    stats->positions += local.positions;
    stats->invalid_forecast += local.invalid_forecast;
    stats->invalid_target += local.invalid_target;
    stats->emitted += local.emitted;
  }
  return out;
}

Role correction_role(int hour, const WindowConfig& cfg) {
  if (hour < 0 || hour >= cfg.file_len) fail(ErrorKind::Argument, "hour out of [0, file_len)");
  if (hour < cfg.n) return Role::Pre;
  if (hour >= cfg.file_len - cfg.n) return Role::End;
  return Role::Mid;
}

InferenceWindow inference_window(int hour, const WindowConfig& cfg) {
  const Role role = correction_role(hour, cfg);
  InferenceWindow w{hour, role, false};
  switch (role) {
    case Role::Pre: w = {hour, role, true}; break;
    case Role::Mid: w = {hour - cfg.mid_offset(), role, false}; break;
    case Role::End: w = {hour - cfg.n, role, false}; break;
  }
  if (w.start < 0 || w.start + cfg.n > cfg.file_len - 1) {
    fail(ErrorKind::Internal, "inference window for hour " + std::to_string(hour) + " leaves the file");
  }
  return w;
}

std::vector<double> reverse_window(std::span<const double> window, std::size_t vars) {
  if (vars == 0 || window.empty() || window.size() % vars != 0) fail(ErrorKind::Argument, "malformed window");
  const std::size_t steps = window.size() / vars;
  std::vector<double> out(window.size());
  for (std::size_t t = 0; t < steps; ++t) {
    std::copy_n(window.begin() + static_cast<std::ptrdiff_t>((steps - 1 - t) * vars), vars,
                out.begin() + static_cast<std::ptrdiff_t>(t * vars));
  }
  return out;
}

DateSplit holdout_split(const AlignedDataset& dataset, const std::vector<Date>& holdout_dates) {
  std::set<Date> holdout;
  for (const Date d : holdout_dates) {
    if (dataset.forecast_for(d) == nullptr) {
      fail(ErrorKind::Config, "holdout date " + format_date(d) + " has no forecast file");
    }
    if (month_of(d) == 12) fail(ErrorKind::Config, "holdout date " + format_date(d) + " falls in December");
    holdout.insert(d);
  }
  DateSplit split;
  for (const auto& f : dataset.forecasts) {
    if (month_of(f.issue_date) == 12) split.excluded.push_back(f.issue_date);
    else if (holdout.contains(f.issue_date)) split.test.push_back(f.issue_date);
    else split.train.push_back(f.issue_date);
  }
  return split;
}

std::vector<Date> reference_holdout_dates_2019() {
  using namespace std::chrono;
  const year y{2019};
  return {sys_days{y / July / 13},     sys_days{y / July / 23},    sys_days{y / August / 4},
          sys_days{y / August / 18},   sys_days{y / September / 8}, sys_days{y / September / 20},
          sys_days{y / October / 1},   sys_days{y / October / 30},  sys_days{y / November / 9},
          sys_days{y / November / 22}};
}

void write_sample_dump(const std::filesystem::path& path, std::span<const TriadSample> samples) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
  out << "station_id,issue_date,start_hour,role,target_hour,target\n";
  for (const auto& s : samples) {
    out << s.station_id << ',' << format_date(s.issue_date) << ',' << s.start_hour << ',' << to_string(s.role) << ','
        << format_hour_stamp(s.target_hour) << ',' << csv::fixed(s.target, 4) << '\n';
  }
}

}  // namespace aqtriad
