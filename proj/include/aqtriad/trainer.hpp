#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "aqtriad/clusterer.hpp"
#include "aqtriad/kernels.hpp"
#include "aqtriad/nn/birnn.hpp"
#include "aqtriad/series_ingest.hpp"
#include "aqtriad/windowing.hpp"

namespace aqtriad {

struct TrainConfig {
  int epochs = 30;
  std::size_t batch_size = 64;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  std::uint64_t seed = 0;
  int patience = 5;
  WindowConfig window;
  double dropout = 0.25;
  std::size_t hidden = 200;
  std::size_t layers = 5;
  nn::CellKind cell = nn::CellKind::Lstm;
  double validation_fraction = 0.1;
  double clip_norm = 5.0;
  /// 0 keeps every sample; otherwise a seeded subsample of this size per role.
  std::size_t max_samples_per_role = 0;

  void validate() const;
  nn::NetworkShape shape(std::size_t input) const;
};

/// Width of the network input after wind_direction and time_of_day are
/// expanded into sin/cos pairs.
std::size_t expanded_dim(Pollutant p);
/// Expands one raw feature vector into `out` (expanded_dim values).
void expand_features(Pollutant p, std::span<const double> raw, double* out);

/// Per-feature (expanded) and target mean / population std over training
/// samples. Zero-variance columns get std 1.
struct NormStats {
  std::vector<double> feature_mean;
  std::vector<double> feature_std;
  double target_mean = 0.0;
  double target_std = 1.0;

  bool operator==(const NormStats&) const = default;
};

NormStats fit_norm_stats(std::span<const TriadSample> samples, Pollutant pollutant);
/// fit_norm_stats over several collections at once (all roles share stats).
NormStats fit_norm_stats(std::span<const std::vector<TriadSample>> groups, Pollutant pollutant);

/// Expands and normalizes a raw (steps x vars) window into `out`.
void normalize_window(const NormStats& norm, Pollutant pollutant, std::span<const double> raw, std::size_t steps,
                      double* out);

kernels::WindowSet make_window_set(std::span<const TriadSample> samples, const NormStats& norm, Pollutant pollutant,
                                   std::size_t steps);

struct ClusterDataset {
  std::array<std::vector<TriadSample>, 3> by_role;
  WindowStats stats;
  std::size_t stations = 0;

  const std::vector<TriadSample>& role(Role r) const { return by_role[static_cast<int>(r)]; }
  bool any_empty() const;
};

/// Pools triad samples of every station assigned to `cluster`, drawn only from
/// `train_dates` files. Pre windows are stored reversed.
ClusterDataset build_cluster_dataset(const Clustering& clustering, int cluster, const AlignedDataset& dataset,
                                     std::span<const Date> train_dates, const WindowConfig& window);

struct TrainingLog {
  int epochs_run = 0;
  int best_epoch = 0;  ///< 0 means the initial parameters were kept
  std::size_t train_samples = 0;
  std::size_t validation_samples = 0;
  double initial_train_loss = 0.0;  ///< eval-mode MSE in normalized units
  double final_train_loss = 0.0;
  double best_validation_loss = 0.0;
  std::vector<double> train_loss_history;
  std::vector<double> validation_loss_history;
};

/// Trains one network on normalized windows with shuffled mini-batches, Adam,
/// global-norm clipping and validation-slice early stopping.
nn::StackedBiRnn train_network(const kernels::WindowSet& data, const TrainConfig& cfg, std::uint64_t seed,
                               TrainingLog& log);

struct TriadModel {
  int cluster = 0;
  Pollutant pollutant = Pollutant::Ozone;
  WindowConfig window;
  NormStats norm;
  std::array<nn::StackedBiRnn, 3> nets;
  std::array<TrainingLog, 3> logs;
  std::uint64_t seed = 0;

  const nn::StackedBiRnn& net(Role r) const { return nets[static_cast<int>(r)]; }
};

/// Trains the pre, mid and end networks. Throws Training naming the first empty role.
TriadModel train_triad(const ClusterDataset& data, const TrainConfig& cfg, Pollutant pollutant, int cluster = 0);

/// Corrected concentration for `hour` of `station` in `file`, or nullopt when
/// the inference window contains an invalid forecast hour.
std::optional<double> predict_hour(const TriadModel& model, const ForecastFile& file, const std::string& station,
                                   int hour);

/// All 48 hours at once.
std::array<std::optional<double>, kForecastFileHours> predict_file(const TriadModel& model, const ForecastFile& file,
                                                                    const std::string& station);

nlohmann::json to_json(const NormStats& n);
NormStats norm_stats_from_json(const nlohmann::json& j);
nlohmann::json to_json(const TriadModel& m);
TriadModel triad_model_from_json(const nlohmann::json& j);

inline constexpr int kModelFormatVersion = 1;

}  // namespace aqtriad
