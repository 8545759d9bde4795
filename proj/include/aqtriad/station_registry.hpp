#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace aqtriad {

/// Station identity plus the geographic features used for clustering.
/// IDs are kept as strings; numeric AirNow codes lose leading zeros otherwise.
struct Station {
  std::string station_id;
  double latitude = 0.0;
  double longitude = 0.0;
  std::optional<double> elevation;  ///< meters above sea level
  std::optional<int> ruca;          ///< rural-urban commuting area code, 1..10
  double missing_fraction = 0.0;    ///< filled in by align()
};

/// Which station features participate in clustering. Lat/lon is mandatory.
struct FeatureSelection {
  bool lat_lon = true;
  bool elevation = false;
  bool urbanization = false;

  /// Parses a comma list such as `lat_lon,elevation`.
  static FeatureSelection parse(const std::string& text);
  std::string to_string() const;
  void validate() const;

  bool operator==(const FeatureSelection&) const = default;
};

/// Insertion-ordered, duplicate-free station collection. Immutable once built
/// except through the explicit missing-fraction update.
class StationRegistry {
 public:
  StationRegistry() = default;

  /// Throws Validation on duplicate IDs or out-of-range coordinates/RUCA.
  void add(Station station);

  const std::vector<Station>& stations() const { return stations_; }
  std::size_t size() const { return stations_.size(); }
  bool empty() const { return stations_.empty(); }

  const Station* find(const std::string& id) const;
  bool contains(const std::string& id) const { return find(id) != nullptr; }

  void set_missing_fraction(const std::string& id, double fraction);

 private:
  std::vector<Station> stations_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Reads `station_id,latitude,longitude,elevation,ruca`. Empty elevation/ruca
/// cells become absent fields.
StationRegistry load_station_metadata(const std::filesystem::path& path);

/// Keeps stations that carry every selected feature, in input order.
StationRegistry filter_for_clustering(const StationRegistry& registry, const FeatureSelection& features);

void validate_station(const Station& s);

}  // namespace aqtriad
