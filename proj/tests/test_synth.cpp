#include <gtest/gtest.h>

#include <cmath>

#include "aqtriad/synth.hpp"
#include "test_util.hpp"

using namespace aqtriad;

namespace {

SynthConfig quiet() {
  SynthConfig c;
  c.stations = 6;
  c.regions = 3;
  c.days = 8;
  c.obs_noise = 0.0;
  c.fc_noise = 0.0;
  c.missing_rate = 0.0;
  return c;
}

double fc_value(const ForecastFile& f, const std::string& id, int h) { return f.find(id)->hour(h, f.vars())[0]; }

}  // namespace

TEST(Synth, DegenerateForecastEqualsObservation) {
  auto cfg = quiet();
  cfg.bias_amplitude = 0.0;
  cfg.jump_amplitude = 0.0;
  aqtest::TempDir dir("synth");
  generate_world(cfg, dir.path());
  const auto ds = aqtest::load_world(dir.path(), Pollutant::Ozone);
  std::size_t n = 0;
  for (const auto& f : ds.forecasts) {
    for (const auto& s : ds.registry.stations()) {
      for (int h = 0; h < 48; ++h) {
        const auto obs = ds.observations.at(s.station_id).at(forecast_hour_stamp(f.issue_date, h));
        ASSERT_TRUE(obs.has_value());
        EXPECT_EQ(fc_value(f, s.station_id, h), *obs);
        ++n;
      }
    }
  }
  EXPECT_EQ(n, 8u * 6u * 48u);
}

TEST(Synth, JumpAmplitudeIsExact) {
  auto cfg = quiet();
  cfg.jump_amplitude = 10.0;
  aqtest::TempDir dir("synth");
  generate_world(cfg, dir.path());
  const auto ds = aqtest::load_world(dir.path(), Pollutant::Ozone);
  double sum = 0.0;
  int n = 0;
  for (std::size_t d = 0; d + 1 < ds.forecasts.size(); ++d) {
    for (const auto& s : ds.registry.stations()) {
      ASSERT_EQ(forecast_hour_stamp(ds.forecasts[d + 1].issue_date, 0),
                forecast_hour_stamp(ds.forecasts[d].issue_date, 24));
      sum += std::abs(fc_value(ds.forecasts[d + 1], s.station_id, 0) - fc_value(ds.forecasts[d], s.station_id, 24));
      ++n;
    }
  }
  EXPECT_NEAR(sum / n, 10.0, 1e-5);
  EXPECT_DOUBLE_EQ(jump_term(cfg, 24) - jump_term(cfg, 0), 10.0);
}

TEST(Synth, MissingRateConcentrates) {
  SynthConfig cfg;
  cfg.stations = 50;
  cfg.regions = 5;
  cfg.days = 81;
  cfg.missing_rate = 0.1;
  aqtest::TempDir dir("synth");
  const auto sum = generate_world(cfg, dir.path());
  EXPECT_GE(sum.observation_hours, 99000u);
  const double frac = static_cast<double>(sum.missing_observations) / sum.observation_hours;
  EXPECT_NEAR(frac, 0.10, 0.005);
  const auto obs = load_observations(dir / "observations.csv", Pollutant::Ozone);
  std::size_t invalid = 0;
  for (const auto& [id, s] : obs) invalid += s.size() - s.valid_count();
  EXPECT_EQ(invalid, sum.missing_observations);
}

TEST(Synth, OracleBiasReconstruction) {
  auto cfg = quiet();
  aqtest::TempDir dir("synth");
  generate_world(cfg, dir.path());
  const auto ds = aqtest::load_world(dir.path(), Pollutant::Ozone);
  for (int d = 0; d < cfg.days; ++d) {
    const auto& f = ds.forecasts[d];
    for (int s = 0; s < cfg.stations; ++s) {
      for (int h = 0; h < 48; ++h) {
        const double residual = fc_value(f, station_id_for(s), h) -
                                synth_truth(cfg, s, forecast_hour_stamp(f.issue_date, h)) - jump_term(cfg, h);
        EXPECT_NEAR(residual, oracle_bias(cfg, s, d, h), 2e-6);
      }
    }
  }
}

TEST(Synth, OracleBiasZeroAndPeriodic) {
  auto cfg = quiet();
  cfg.bias_amplitude = 0.0;
  for (int s = 0; s < cfg.stations; ++s) {
    for (int h = 0; h < 48; ++h) EXPECT_EQ(oracle_bias(cfg, s, 2, h), 0.0);
  }
  cfg.bias_amplitude = 8.0;
  cfg.bias_phase = 14.0;
  for (int s = 0; s < cfg.stations; ++s) {
    for (int h = 0; h < 24; ++h) EXPECT_DOUBLE_EQ(oracle_bias(cfg, s, 1, h), oracle_bias(cfg, s, 3, h + 24));
  }
  // region 0 peaks at the configured hour of day (hour index 1 is 14:00 UTC)
  int best = 0;
  for (int h = 0; h < 24; ++h) {
    if (oracle_bias(cfg, 0, 0, h) > oracle_bias(cfg, 0, 0, best)) best = h;
  }
  EXPECT_EQ((13 + best) % 24, 14);
  EXPECT_EQ(aqtest::error_kind([&] { oracle_bias(cfg, 6, 0, 0); }), ErrorKind::Argument);
  EXPECT_EQ(aqtest::error_kind([&] { oracle_bias(cfg, 0, 8, 0); }), ErrorKind::Argument);
  EXPECT_EQ(aqtest::error_kind([&] { oracle_bias(cfg, 0, 0, 48); }), ErrorKind::Argument);
}

TEST(Synth, ClosedFormForecastRmse) {
  // noise-free: the forecast error is exactly bias + jump
  auto cfg = quiet();
  aqtest::TempDir dir("synth");
  generate_world(cfg, dir.path());
  const auto ds = aqtest::load_world(dir.path(), Pollutant::Ozone);
  auto empirical = [](const AlignedDataset& d) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& f : d.forecasts) {
      for (const auto& s : d.registry.stations()) {
        for (int h = 0; h < 48; ++h) {
          const auto o = d.observations.at(s.station_id).at(forecast_hour_stamp(f.issue_date, h));
          if (!o) continue;
          const double e = fc_value(f, s.station_id, h) - *o;
          sum += e * e;
          ++n;
        }
      }
    }
    return std::sqrt(sum / n);
  };
  EXPECT_NEAR(empirical(ds), expected_systematic_rmse(cfg), 1e-5);
  EXPECT_EQ(expected_systematic_rmse(cfg), expected_forecast_rmse(cfg));

  SynthConfig noisy;
  aqtest::TempDir dir2("synth");
  generate_world(noisy, dir2.path());
  const auto ds2 = aqtest::load_world(dir2.path(), Pollutant::Ozone);
  EXPECT_NEAR(empirical(ds2) / expected_forecast_rmse(noisy), 1.0, 0.02);
}

TEST(Synth, DeterministicAndSeedSensitive) {
  SynthConfig cfg;
  cfg.stations = 5;
  cfg.days = 3;
  cfg.regions = 2;
  aqtest::TempDir a("synth"), b("synth"), c("synth");
  generate_world(cfg, a.path());
  generate_world(cfg, b.path());
  for (const auto& e : std::filesystem::directory_iterator(a.path())) {
    EXPECT_EQ(aqtest::read_text(e.path()), aqtest::read_text(b / e.path().filename().string()))
        << e.path().filename();
  }
  cfg.seed = 2;
  generate_world(cfg, c.path());
  EXPECT_NE(aqtest::read_text(a / "observations.csv"), aqtest::read_text(c / "observations.csv"));
}

TEST(Synth, RegionsFormSeparableBlobs) {
  SynthConfig cfg;
  cfg.stations = 40;
  cfg.regions = 4;
  cfg.days = 1;
  aqtest::TempDir dir("synth");
  generate_world(cfg, dir.path());
  const auto reg = load_station_metadata(dir / "stations.csv");
  // every station is closer to its own region's mean than to any other region's mean
  std::vector<double> lat(4, 0), lon(4, 0);
  for (int s = 0; s < 40; ++s) {
    lat[region_of(cfg, s)] += reg.stations()[s].latitude / 10;
    lon[region_of(cfg, s)] += reg.stations()[s].longitude / 10;
  }
  for (int s = 0; s < 40; ++s) {
    const auto& st = reg.stations()[s];
    int best = 0;
    double bd = 1e300;
    for (int r = 0; r < 4; ++r) {
      const double d = std::pow(st.latitude - lat[r], 2) + std::pow(st.longitude - lon[r], 2);
      if (d < bd) {
        bd = d;
        best = r;
      }
    }
    EXPECT_EQ(best, region_of(cfg, s));
  }
}

TEST(SynthConfig, ValidationAndKeyValues) {
  SynthConfig cfg;
  cfg.stations = 0;
  EXPECT_EQ(aqtest::error_kind([&] { cfg.validate(); }), ErrorKind::Argument);
  aqtest::TempDir dir("synth");
  EXPECT_EQ(aqtest::error_kind([&] { generate_world(cfg, dir.path()); }), ErrorKind::Argument);
  cfg = SynthConfig{};
  cfg.missing_rate = 1.0;
  EXPECT_EQ(aqtest::error_kind([&] { cfg.validate(); }), ErrorKind::Argument);
  cfg = SynthConfig{};
  cfg.jump_amplitude = -1;
  EXPECT_EQ(aqtest::error_kind([&] { cfg.validate(); }), ErrorKind::Argument);

  SynthConfig custom;
  custom.stations = 7;
  custom.missing_rate = 0.05;
  custom.pollutant = Pollutant::Pm25;
  const auto back = SynthConfig::from_key_values(custom.to_key_values());
  EXPECT_EQ(back.to_key_values().values(), custom.to_key_values().values());
  EXPECT_EQ(back.missing_rate, 0.05);
  EXPECT_EQ(aqtest::error_kind([] { SynthConfig::from_key_values(KeyValues::parse("statons = 3")); }),
            ErrorKind::Config);
}
