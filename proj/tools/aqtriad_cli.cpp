#include <omp.h>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "aqtriad/errors.hpp"
#include "aqtriad/pipeline.hpp"

using namespace aqtriad;

namespace {

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::string out;
};

KeyValues load_overrides(const Globals& g, bool require_config) {
  KeyValues kv;
  if (!g.config.empty()) {
    kv = KeyValues::read(g.config);
  } else if (require_config) {
    fail(ErrorKind::Argument, "--config is required");
  }
  if (g.seed) kv.set("seed", std::to_string(*g.seed));
  if (g.workers) kv.set("workers", std::to_string(*g.workers));
  if (!g.out.empty()) kv.set("out", g.out);
  return kv;
}

RunConfig run_config(const Globals& g) { return RunConfig::from_key_values(load_overrides(g, true)); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cluster-based triad bias correction for hourly air-quality forecasts"};
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--config", g.config, "flat key=value config file");
  app.add_option("--seed", g.seed, "override the config seed");
  app.add_option("--workers", g.workers, "OpenMP worker threads (default: all cores)")->check(CLI::PositiveNumber);
  app.add_option("--out", g.out, "output directory");

  auto* synth = app.add_subcommand("synth", "generate a synthetic world");
  auto* cluster = app.add_subcommand("cluster", "cluster stations with k-means");
  auto* train = app.add_subcommand("train", "train one triad model per cluster");
  auto* evaluate = app.add_subcommand("evaluate", "correct the holdout forecasts and score them");
  auto* report = app.add_subcommand("report", "rebuild tables from stored prediction files");

  std::vector<std::string> predictions;
  std::string pollutant = "ozone";
  report->add_option("--predictions", predictions, "label=path of a predictions.csv (repeatable)")->required();
  report->add_option("--pollutant", pollutant, "ozone or pm25");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : exit_code_for(ErrorKind::Argument);
  }

  try {
    if (g.workers) omp_set_num_threads(*g.workers);
    if (synth->parsed()) {
      auto kv = load_overrides(g, false);
      const std::string out = kv.get("out", "synth_world");
      const auto cfg = SynthConfig::from_key_values(kv);
      const auto s = cmd_synth(cfg, out);
      std::printf("wrote %zu stations, %zu forecast files, %zu observation hours (%zu missing) to %s\n", s.stations,
                  s.forecast_files, s.observation_hours, s.missing_observations, out.c_str());
      std::printf("expected forecast RMSE %.4f (systematic %.4f, noise floor %.4f)\n", expected_forecast_rmse(cfg),
                  expected_systematic_rmse(cfg), expected_noise_floor(cfg));
    } else if (cluster->parsed()) {
      std::string summary;
      cmd_cluster(run_config(g), &summary);
      std::cout << summary;
    } else if (train->parsed()) {
      std::string summary;
      cmd_train(run_config(g), &summary);
      std::cout << summary;
    } else if (evaluate->parsed()) {
      std::string summary;
      const auto result = cmd_evaluate(run_config(g), &summary);
      std::cout << summary;
      for (const auto& w : result.report.warnings) std::cerr << "warning: " << w << '\n';
    } else if (report->parsed()) {
      std::vector<std::pair<std::string, std::filesystem::path>> inputs;
      for (const auto& p : predictions) {
        const auto eq = p.rfind('=');
        if (eq == std::string::npos) {
          inputs.emplace_back(std::filesystem::path(p).parent_path().filename().string(), p);
        } else {
          inputs.emplace_back(p.substr(0, eq), p.substr(eq + 1));
        }
      }
      std::cout << cmd_report(inputs, parse_pollutant(pollutant), g.out);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return exit_code_for(ErrorKind::Internal);
  }
  return 0;
}
