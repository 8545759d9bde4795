#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "aqtriad/clusterer.hpp"
#include "aqtriad/config.hpp"
#include "aqtriad/evaluator.hpp"
#include "aqtriad/synth.hpp"
#include "aqtriad/trainer.hpp"

namespace aqtriad {

struct RunConfig {
  Pollutant pollutant = Pollutant::Ozone;
  std::filesystem::path stations;
  std::filesystem::path observations;
  std::filesystem::path forecast_dir;
  FeatureSelection features;
  int k = 25;
  int restarts = 10;
  int max_iter = 300;
  TrainConfig train;
  /// Explicit dates, or chosen by `holdout = auto:N` when the data is loaded.
  std::vector<Date> holdout;
  int holdout_auto = 0;
  std::uint64_t seed = 0;
  std::filesystem::path out = "run";
  bool plots = false;
  int workers = 0;  ///< 0 leaves the OpenMP default

  /// `data = DIR` fills stations, observations and forecast_dir with the
  /// default file names inside DIR.
  static RunConfig from_key_values(const KeyValues& kv);
  KeyValues to_key_values() const;
  void validate() const;

  std::filesystem::path clustering_path() const { return out / "clustering.json"; }
  std::filesystem::path model_dir() const { return out / "models"; }
  std::filesystem::path eval_dir() const { return out / "eval"; }
};

/// FNV-1a over the canonical `key=value` lines.
std::uint64_t config_hash(const KeyValues& kv);

/// Evenly spaced non-December issue dates, never the first file.
std::vector<Date> auto_holdout(const AlignedDataset& dataset, int count);

AlignedDataset load_dataset(const RunConfig& cfg);
std::vector<Date> resolve_holdout(const RunConfig& cfg, const AlignedDataset& dataset);

/// Writes `text` to `path` through a temporary file and rename.
void write_text_atomic(const std::filesystem::path& path, const std::string& text);
nlohmann::json read_json(const std::filesystem::path& path);

SynthSummary cmd_synth(const SynthConfig& cfg, const std::filesystem::path& out);

Clustering cmd_cluster(const RunConfig& cfg, std::string* summary = nullptr);

struct TrainResult {
  std::map<int, TriadModel> models;
  std::vector<std::string> warnings;
};
TrainResult cmd_train(const RunConfig& cfg, std::string* summary = nullptr);

std::map<int, TriadModel> load_models(const std::filesystem::path& model_dir);

EvaluationResult cmd_evaluate(const RunConfig& cfg, std::string* summary = nullptr);

/// Rebuilds reports from stored prediction files and returns the text tables.
std::string cmd_report(const std::vector<std::pair<std::string, std::filesystem::path>>& inputs, Pollutant pollutant,
                       const std::filesystem::path& out);

}  // namespace aqtriad
