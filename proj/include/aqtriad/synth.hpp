#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "aqtriad/config.hpp"
#include "aqtriad/series_ingest.hpp"
#include "aqtriad/timeutil.hpp"

namespace aqtriad {

struct SynthConfig {
  Pollutant pollutant = Pollutant::Ozone;
  int stations = 40;
  Date start_date = parse_date("2019-07-01");
  int days = 60;  ///< forecast files issued
  std::uint64_t seed = 1;
  int regions = 4;
  double baseline = 40.0;
  double diurnal_amplitude = 15.0;
  double bias_amplitude = 8.0;
  double bias_phase = 14.0;  ///< hour of day where the region-0 diurnal bias peaks
  double obs_noise = 2.0;
  double fc_noise = 2.0;
  double jump_amplitude = 10.0;
  double missing_rate = 0.05;

  /// Throws Argument on zero stations, negative amplitudes, etc.
  void validate() const;

  static SynthConfig from_key_values(const KeyValues& kv);
  KeyValues to_key_values() const;
};

std::string station_id_for(int index);
int region_of(const SynthConfig& cfg, int station_index);

/// Injected systematic error (region and hour-of-day term) for forecast hour
/// `hour` of issue day `day` (0-based from start_date) at station `station`.
double oracle_bias(const SynthConfig& cfg, int station, int day, int hour);

/// Lead-time drift added to forecast hour h; hour 0 of day d+1 differs from
/// hour 24 of day d by exactly jump_amplitude.
double jump_term(const SynthConfig& cfg, int hour);

/// Noise-free truth at absolute hour `t` for station index `station`.
double synth_truth(const SynthConfig& cfg, int station, HourStamp t);

/// Closed-form RMS of (forecast - observation) over every forecast hour,
/// ignoring the non-negativity clamp on observations.
double expected_forecast_rmse(const SynthConfig& cfg);
/// Same with zero noise: the RMS of bias plus jump contribution.
double expected_systematic_rmse(const SynthConfig& cfg);
/// Floor reachable by a perfect corrector that recovers truth exactly.
double expected_noise_floor(const SynthConfig& cfg);

struct SynthSummary {
  std::filesystem::path dir;
  std::size_t stations = 0;
  std::size_t forecast_files = 0;
  std::size_t observation_hours = 0;
  std::size_t missing_observations = 0;
};

/// Writes stations.csv, observations.csv, forecast_YYYY-MM-DD.csv and
/// synth_manifest.json into `dir`. Pure function of cfg.
SynthSummary generate_world(const SynthConfig& cfg, const std::filesystem::path& dir);

nlohmann::json synth_manifest(const SynthConfig& cfg);

}  // namespace aqtriad
