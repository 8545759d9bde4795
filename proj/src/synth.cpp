#include "aqtriad/synth.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "aqtriad/csv.hpp"
#include "aqtriad/errors.hpp"
#include "aqtriad/rng.hpp"

namespace aqtriad {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// uniform [0,1) from a hashed stream, no generator state
double unit_hash(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  return static_cast<double>(mix_seed(seed, a, b) >> 11) * 0x1.0p-53;
}

double station_offset(const SynthConfig& cfg, int s) { return -5.0 + 10.0 * unit_hash(cfg.seed, 11, s); }

double synoptic(const SynthConfig& cfg, int region, HourStamp t) {
  const double p1 = kTwoPi * unit_hash(cfg.seed, 12, region);
  const double p2 = kTwoPi * unit_hash(cfg.seed, 13, region);
  const double td = static_cast<double>(t);
  return 6.0 * std::sin(kTwoPi * td / (24.0 * 5.3) + p1) + 3.0 * std::sin(kTwoPi * td / (24.0 * 2.3) + p2);
}

double diurnal(int hod, double peak_hour) { return std::cos(kTwoPi * (hod - peak_hour) / 24.0); }

std::string num(double v) { return csv::fixed(v, 6); }

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
  out << text;
  if (!out) fail(ErrorKind::Io, "write failed for " + path.string());
}

}  // namespace

void SynthConfig::validate() const {
  if (stations <= 0) fail(ErrorKind::Argument, "synthetic world needs at least one station");
  if (days <= 0) fail(ErrorKind::Argument, "synthetic world needs at least one day");
  if (regions <= 0 || regions > stations) fail(ErrorKind::Argument, "regions must be in [1, stations]");
  for (const auto& [name, v] : {std::pair{"baseline", baseline}, {"diurnal_amplitude", diurnal_amplitude},
                                {"bias_amplitude", bias_amplitude}, {"obs_noise", obs_noise},
                                {"fc_noise", fc_noise}, {"jump_amplitude", jump_amplitude}}) {
    if (!(v >= 0.0) || !std::isfinite(v)) fail(ErrorKind::Argument, std::string(name) + " must be >= 0");
  }
  if (!(missing_rate >= 0.0 && missing_rate < 1.0)) fail(ErrorKind::Argument, "missing_rate must be in [0,1)");
  if (!std::isfinite(bias_phase)) fail(ErrorKind::Argument, "bias_phase must be finite");
}

SynthConfig SynthConfig::from_key_values(const KeyValues& kv) {
  kv.require_known({"pollutant", "stations", "start_date", "days", "seed", "regions", "baseline",
                    "diurnal_amplitude", "bias_amplitude", "bias_phase", "obs_noise", "fc_noise", "jump_amplitude",
                    "missing_rate", "out"});
  SynthConfig c;
  try {
    if (kv.has("pollutant")) c.pollutant = parse_pollutant(kv.get("pollutant", ""));
    if (kv.has("start_date")) c.start_date = parse_date(kv.get("start_date", ""));
  } catch (const Error& e) {
    fail(ErrorKind::Config, e.what());
  }
  c.stations = static_cast<int>(kv.get_int("stations", c.stations));
  c.days = static_cast<int>(kv.get_int("days", c.days));
  c.seed = kv.get_u64("seed", c.seed);
  c.regions = static_cast<int>(kv.get_int("regions", c.regions));
  c.baseline = kv.get_double("baseline", c.baseline);
  c.diurnal_amplitude = kv.get_double("diurnal_amplitude", c.diurnal_amplitude);
  c.bias_amplitude = kv.get_double("bias_amplitude", c.bias_amplitude);
  c.bias_phase = kv.get_double("bias_phase", c.bias_phase);
  c.obs_noise = kv.get_double("obs_noise", c.obs_noise);
  c.fc_noise = kv.get_double("fc_noise", c.fc_noise);
  c.jump_amplitude = kv.get_double("jump_amplitude", c.jump_amplitude);
  c.missing_rate = kv.get_double("missing_rate", c.missing_rate);
  return c;
}

KeyValues SynthConfig::to_key_values() const {
  KeyValues kv;
  auto d = [](double v) {
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
  };
  kv.set("pollutant", to_string(pollutant));
  kv.set("stations", std::to_string(stations));
  kv.set("start_date", format_date(start_date));
  kv.set("days", std::to_string(days));
  kv.set("seed", std::to_string(seed));
  kv.set("regions", std::to_string(regions));
  kv.set("baseline", d(baseline));
  kv.set("diurnal_amplitude", d(diurnal_amplitude));
  kv.set("bias_amplitude", d(bias_amplitude));
  kv.set("bias_phase", d(bias_phase));
  kv.set("obs_noise", d(obs_noise));
  kv.set("fc_noise", d(fc_noise));
  kv.set("jump_amplitude", d(jump_amplitude));
  kv.set("missing_rate", d(missing_rate));
  return kv;
}

std::string station_id_for(int index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "S%03d", index);
  return buf;
}

int region_of(const SynthConfig& cfg, int station_index) { return station_index % cfg.regions; }

double oracle_bias(const SynthConfig& cfg, int station, int day, int hour) {
  if (station < 0 || station >= cfg.stations) fail(ErrorKind::Argument, "station index out of range");
  if (day < 0 || day >= cfg.days) fail(ErrorKind::Argument, "day out of range");
  if (hour < 0 || hour >= kForecastFileHours) fail(ErrorKind::Argument, "forecast hour out of [0,47]");
  const int r = region_of(cfg, station);
  const double level = cfg.regions == 1 ? 0.0 : -1.0 + 2.0 * r / (cfg.regions - 1);
  const double phase = cfg.bias_phase + 24.0 * r / cfg.regions;
  const int hod = (kForecastStartHourUtc + hour) % 24;
  return cfg.bias_amplitude * (0.5 * level + 0.5 * diurnal(hod, phase));
}

double jump_term(const SynthConfig& cfg, int hour) { return cfg.jump_amplitude * (hour / 24.0 - 0.5); }

double synth_truth(const SynthConfig& cfg, int station, HourStamp t) {
  const int hod = hour_of_day(t);
  const double v = cfg.baseline + station_offset(cfg, station) + cfg.diurnal_amplitude * diurnal(hod, 15.0) +
                   synoptic(cfg, region_of(cfg, station), t);
  return std::max(0.0, v);
}

double expected_systematic_rmse(const SynthConfig& cfg) {
  cfg.validate();
  double sum = 0.0;
  for (int s = 0; s < cfg.stations; ++s) {
    for (int h = 0; h < kForecastFileHours; ++h) {
      const double m = oracle_bias(cfg, s, 0, h) + jump_term(cfg, h);
      sum += m * m;
    }
  }
  return std::sqrt(sum / (static_cast<double>(cfg.stations) * kForecastFileHours));
}

double expected_forecast_rmse(const SynthConfig& cfg) {
  const double sys = expected_systematic_rmse(cfg);
  return std::sqrt(sys * sys + cfg.fc_noise * cfg.fc_noise + cfg.obs_noise * cfg.obs_noise);
}

double expected_noise_floor(const SynthConfig& cfg) { return cfg.obs_noise; }

nlohmann::json synth_manifest(const SynthConfig& cfg) {
  nlohmann::json j;
  j["generator"] = "aqtriad synth";
  nlohmann::json c = nlohmann::json::object();
  const auto kv = cfg.to_key_values();
  for (const auto& [k, v] : kv.values()) c[k] = v;
  j["config"] = c;
  j["seed"] = cfg.seed;
  j["expected_forecast_rmse"] = expected_forecast_rmse(cfg);
  j["expected_systematic_rmse"] = expected_systematic_rmse(cfg);
  j["expected_noise_floor"] = expected_noise_floor(cfg);
  return j;
}

SynthSummary generate_world(const SynthConfig& cfg, const std::filesystem::path& dir) {
  cfg.validate();
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) fail(ErrorKind::Io, "cannot create output directory " + dir.string());

  SynthSummary sum;
  sum.dir = dir;
  sum.stations = static_cast<std::size_t>(cfg.stations);

  // stations: one spatial blob per region on a coarse grid over the CONUS box
  {
    const int cols = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(cfg.regions))));
    const int rows = (cfg.regions + cols - 1) / cols;
    Rng rng(mix_seed(cfg.seed, 1));
    std::normal_distribution<double> jitter(0.0, 0.8);
    std::normal_distribution<double> elev_noise(0.0, 40.0);
    std::ostringstream out;
    out << "station_id,latitude,longitude,elevation,ruca\n";
    for (int s = 0; s < cfg.stations; ++s) {
      const int r = region_of(cfg, s);
      const double clat = 28.0 + 20.0 * (r / cols + 0.5) / rows;
      const double clon = -120.0 + 45.0 * (r % cols + 0.5) / cols;
      const double lat = std::clamp(clat + jitter(rng), -89.0, 89.0);
      const double lon = clon + jitter(rng);
      const double elev = std::max(0.0, 150.0 + 350.0 * r + elev_noise(rng));
      const int ruca = 1 + static_cast<int>(rng() % 10);
      out << station_id_for(s) << ',' << num(lat) << ',' << num(lon) << ',' << csv::fixed(elev, 1) << ',' << ruca
          << '\n';
    }
    write_file(dir / "stations.csv", out.str());
  }

  // observations on [start 00:00, start + days + 2)
  {
    const HourStamp t0 = hour_stamp(cfg.start_date, 0);
    const HourStamp hours = static_cast<HourStamp>(cfg.days + 2) * 24;
    std::ostringstream out;
    out << "station_id,timestamp_utc,value\n";
    for (int s = 0; s < cfg.stations; ++s) {
      Rng rng(mix_seed(cfg.seed, 3, static_cast<std::uint64_t>(s)));
      std::uniform_real_distribution<double> u(0.0, 1.0);
      std::normal_distribution<double> noise(0.0, 1.0);
      const auto id = station_id_for(s);
      for (HourStamp k = 0; k < hours; ++k) {
        const HourStamp t = t0 + k;
        const bool missing = u(rng) < cfg.missing_rate;
        const double v = std::max(0.0, synth_truth(cfg, s, t) + cfg.obs_noise * noise(rng));
        out << id << ',' << format_hour_stamp(t) << ',';
        if (missing) {
          ++sum.missing_observations;
        } else {
          out << num(v);
        }
        out << '\n';
        ++sum.observation_hours;
      }
    }
    write_file(dir / "observations.csv", out.str());
  }

  // forecast files
  const auto names = variable_names(cfg.pollutant);
  for (int d = 0; d < cfg.days; ++d) {
    const Date issue = cfg.start_date + std::chrono::days{d};
    std::ostringstream out;
    out << "station_id,hour_index";
    for (const auto n : names) out << ',' << n;
    out << '\n';
    for (int s = 0; s < cfg.stations; ++s) {
      Rng rng(mix_seed(cfg.seed, 2, static_cast<std::uint64_t>(d) * cfg.stations + s));
      std::normal_distribution<double> noise(0.0, 1.0);
      const auto id = station_id_for(s);
      for (int h = 0; h < kForecastFileHours; ++h) {
        const HourStamp t = forecast_hour_stamp(issue, h);
        const int hod = hour_of_day(t);
        const double truth = synth_truth(cfg, s, t);
        const double jump = jump_term(cfg, h);
        const double conc = truth + oracle_bias(cfg, s, d, h) + jump + cfg.fc_noise * noise(rng);
        const double td = static_cast<double>(t);
        const double radiation = hod >= 6 && hod <= 18 ? 850.0 * std::sin(std::numbers::pi * (hod - 6) / 12.0) : 0.0;
        const double wind_dir =
            std::fmod(200.0 + 60.0 * std::sin(kTwoPi * td / (24.0 * 3.1) + s) + 360.0, 360.0);
        const double wind_speed = 3.0 + 1.5 * std::sin(kTwoPi * td / (24.0 * 1.7) + 0.5 * s);
        out << id << ',' << h;
        for (const auto n : names) {
          double v = 0.0;
          if (n == "ozone" || n == "pm25") {
            v = conc;
          } else if (n == "temperature") {
            v = 22.0 + 6.0 * diurnal(hod, 15.0) + 0.3 * jump;
          } else if (n == "ground_radiation") {
            v = radiation;
          } else if (n == "pbl_height") {
            v = 300.0 + 1200.0 * std::max(0.0, std::sin(std::numbers::pi * (hod - 7) / 14.0));
          } else if (n == "wind_direction") {
            v = wind_dir;
          } else if (n == "wind_speed") {
            v = wind_speed;
          } else if (n == "nox") {
            v = 15.0 + 5.0 * diurnal(hod, 7.0);
          } else if (n == "noy") {
            v = 1.4 * (15.0 + 5.0 * diurnal(hod, 7.0));
          } else if (n == "time_of_day") {
            v = hod;
          } else if (n == "rc_rn") {
            v = 1.0 + 0.05 * jump;
          }
          out << ',' << num(v);
        }
        out << '\n';
      }
    }
    write_file(dir / ("forecast_" + format_date(issue) + ".csv"), out.str());
    ++sum.forecast_files;
  }

  write_file(dir / "synth_manifest.json", synth_manifest(cfg).dump(2) + "\n");
  return sum;
}

}  // namespace aqtriad
