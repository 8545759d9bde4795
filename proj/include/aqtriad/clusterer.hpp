#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "aqtriad/station_registry.hpp"

namespace aqtriad {

struct NormRange {
  double min = 0.0;
  double max = 0.0;

  /// Min-max scaling; a zero-range column maps to 0.
  double apply(double v) const { return max > min ? (v - min) / (max - min) : 0.0; }
};

/// Column names in selection order: latitude, longitude, [elevation], [ruca].
std::vector<std::string> feature_columns(const FeatureSelection& sel);

/// Min-max normalized station features, one row per station.
struct FeatureMatrix {
  std::vector<std::string> station_ids;
  FeatureSelection selection;
  std::vector<std::string> columns;
  std::vector<NormRange> norm_stats;
  std::vector<double> data;  ///< row-major, station_ids.size() x dims()

  std::size_t dims() const { return columns.size(); }
  std::size_t rows() const { return station_ids.size(); }
  std::span<const double> row(std::size_t i) const { return {data.data() + i * dims(), dims()}; }
};

/// Raw (unnormalized) feature values of `s` for the selection.
std::vector<double> raw_features(const Station& s, const FeatureSelection& sel);
std::vector<double> normalize_features(std::span<const double> raw, std::span<const NormRange> norm_stats);

/// Requires at least two stations, each carrying every selected feature.
FeatureMatrix build_feature_matrix(const StationRegistry& registry, const FeatureSelection& features);

struct KMeansOptions {
  int k = 1;
  std::uint64_t seed = 0;
  int restarts = 10;
  int max_iter = 300;
};

/// Outcome of clustering an anonymous point set.
struct KMeansResult {
  int k = 0;
  std::vector<int> labels;
  std::vector<double> centroids;  ///< k x dims, row-major
  double objective = 0.0;
  int best_restart = 0;
  /// Objective after every assignment step and refinement pass of the winning restart.
  std::vector<double> history;
};

/// Sum of squared Euclidean distances from each point to its label's centroid.
double kmeans_objective(std::span<const double> points, std::size_t dims, std::span<const int> labels,
                        std::span<const double> centroids);

/// k-means++ seeding, Lloyd iterations with farthest-point empty-cluster repair,
/// then single-point transfer refinement until no move lowers the objective.
/// The best restart wins; ties go to the lowest restart index.
KMeansResult kmeans_points(std::span<const double> points, std::size_t dims, const KMeansOptions& opt);

struct Clustering {
  int k = 0;
  FeatureSelection selection;
  std::vector<std::string> columns;
  std::vector<NormRange> norm_stats;
  std::vector<std::vector<double>> centroids;
  std::vector<std::string> station_ids;  ///< registry order
  std::vector<int> assignment;           ///< parallel to station_ids
  double objective = 0.0;
  std::uint64_t seed = 0;
  int restarts = 0;

  /// Cluster of a station in the training registry, or -1.
  int cluster_of(const std::string& station_id) const;
  std::vector<std::string> members(int cluster) const;
  std::vector<std::size_t> cluster_sizes() const;
};

Clustering kmeans(const FeatureMatrix& matrix, const KMeansOptions& opt);

/// Nearest centroid by Euclidean distance; ties go to the lowest index.
int assign_to_cluster(const Clustering& clustering, std::span<const double> feature_row);

nlohmann::json to_json(const Clustering& c);
Clustering clustering_from_json(const nlohmann::json& j);

}  // namespace aqtriad
