#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "aqtriad/clusterer.hpp"
#include "aqtriad/series_ingest.hpp"
#include "aqtriad/trainer.hpp"

namespace aqtriad {

/// sqrt(mean((pred-obs)^2)) over masked-in hours. Throws UndefinedMetric if none.
double rmse(std::span<const double> pred, std::span<const double> obs, std::span<const bool> mask);

/// Sample correlation over masked-in hours. Throws UndefinedMetric with fewer
/// than two hours or a constant series.
double pearson(std::span<const double> pred, std::span<const double> obs, std::span<const bool> mask);

/// (max pred - max obs) over hours [0, split) and [split, end), masked hours
/// excluded; an interval without valid hours yields nullopt.
std::pair<std::optional<double>, std::optional<double>> max_concentration_delta(std::span<const double> pred,
                                                                                std::span<const double> obs,
                                                                                std::span<const bool> mask,
                                                                                int split_hour = 15);

/// One (station, holdout day, hour) row of predictions.csv.
struct PredictionRecord {
  std::string station_id;
  Date issue_date{};
  int hour = 0;
  std::optional<double> observed;
  std::optional<double> forecast;
  std::optional<double> corrected;

  bool paired() const { return observed && forecast && corrected; }
};

struct MetricPair {
  std::optional<double> forecast;
  std::optional<double> corrected;
};

struct ScopeMetrics {
  std::string scope;  ///< "aggregate" or a station id
  std::size_t evaluated_hours = 0;
  std::size_t skipped_hours = 0;
  MetricPair rmse;
  MetricPair rmse_first24;
  MetricPair pearson;
  MetricPair max_delta_first15;  ///< mean over station-days
  MetricPair max_delta_final33;

  /// forecast_rmse - corrected_rmse.
  std::optional<double> reduction() const;
  std::optional<double> relative_reduction() const;
};

struct EvalReport {
  Pollutant pollutant = Pollutant::Ozone;
  ScopeMetrics aggregate;
  std::vector<ScopeMetrics> stations;
  std::vector<std::string> warnings;
};

/// Aggregates records into per-station and pooled metrics. Only hours with
/// an observation, a forecast and a correction count toward either RMSE.
EvalReport build_report(std::span<const PredictionRecord> records, Pollutant pollutant);

struct EvaluationResult {
  std::vector<PredictionRecord> records;
  EvalReport report;
};

/// Runs the triad models over every holdout file for every aligned station.
/// Stations without a model are reported in warnings and left uncorrected.
EvaluationResult evaluate(const std::map<int, TriadModel>& models, const Clustering& clustering,
                          const AlignedDataset& dataset, std::span<const Date> holdout_dates);

void write_predictions_csv(const std::filesystem::path& path, std::span<const PredictionRecord> records);
std::vector<PredictionRecord> read_predictions_csv(const std::filesystem::path& path);

/// scope,metric,forecast_value,corrected_value,delta
void write_report_csv(const std::filesystem::path& path, const EvalReport& report);

/// Text table with one column per labelled report: Forecast, Bias Corrected,
/// Reduction and Relative rows.
std::string format_tables(std::span<const std::pair<std::string, EvalReport>> reports);

/// One SVG line chart per station-day: observed, forecast, corrected.
void write_svg_plots(const std::filesystem::path& dir, std::span<const PredictionRecord> records);

}  // namespace aqtriad
