#include "aqtriad/station_registry.hpp"

#include <cmath>
#include <sstream>

#include "aqtriad/csv.hpp"
#include "aqtriad/errors.hpp"

namespace aqtriad {

FeatureSelection FeatureSelection::parse(const std::string& text) {
  FeatureSelection sel;
  sel.lat_lon = false;
  for (const auto& raw : csv::split_line(text)) {
    if (raw.empty()) continue;
    if (raw == "lat_lon") sel.lat_lon = true;
    else if (raw == "elevation") sel.elevation = true;
    else if (raw == "urbanization") sel.urbanization = true;
    else fail(ErrorKind::Argument, "unknown clustering feature '" + raw + "'");
  }
  sel.validate();
  return sel;
}

std::string FeatureSelection::to_string() const {
  std::string out;
  auto append = [&](const char* name) {
    if (!out.empty()) out += ',';
    out += name;
  };
  if (lat_lon) append("lat_lon");
  if (elevation) append("elevation");
  if (urbanization) append("urbanization");
  return out;
}

void FeatureSelection::validate() const {
  if (!lat_lon) fail(ErrorKind::Argument, "feature selection must include lat_lon");
}

void validate_station(const Station& s) {
  if (s.station_id.empty()) fail(ErrorKind::Validation, "empty station_id");
  if (!(s.latitude >= -90.0 && s.latitude <= 90.0)) {
    fail(ErrorKind::Validation, "station " + s.station_id + ": latitude out of [-90,90]");
  }
  if (!(s.longitude >= -180.0 && s.longitude <= 180.0)) {
    fail(ErrorKind::Validation, "station " + s.station_id + ": longitude out of [-180,180]");
  }
  if (s.elevation && !std::isfinite(*s.elevation)) {
    fail(ErrorKind::Validation, "station " + s.station_id + ": non-finite elevation");
  }
  if (s.ruca && (*s.ruca < 1 || *s.ruca > 10)) {
    fail(ErrorKind::Validation, "station " + s.station_id + ": ruca out of [1,10]");
  }
  if (!(s.missing_fraction >= 0.0 && s.missing_fraction <= 1.0)) {
    fail(ErrorKind::Validation, "station " + s.station_id + ": missing_fraction out of [0,1]");
  }
}

void StationRegistry::add(Station station) {
  validate_station(station);
  if (index_.contains(station.station_id)) {
    fail(ErrorKind::Validation, "duplicate station_id " + station.station_id);
  }
  index_.emplace(station.station_id, stations_.size());
  stations_.push_back(std::move(station));
}

const Station* StationRegistry::find(const std::string& id) const {
  const auto it = index_.find(id);
  return it == index_.end() ? nullptr : &stations_[it->second];
}

void StationRegistry::set_missing_fraction(const std::string& id, double fraction) {
  const auto it = index_.find(id);
  if (it == index_.end()) fail(ErrorKind::Argument, "unknown station " + id);
  if (!(fraction >= 0.0 && fraction <= 1.0)) fail(ErrorKind::Validation, "missing_fraction out of [0,1]");
  stations_[it->second].missing_fraction = fraction;
}

StationRegistry load_station_metadata(const std::filesystem::path& path) {
  const auto table = csv::read(path);
  const std::vector<std::string> expected{"station_id", "latitude", "longitude", "elevation", "ruca"};
  if (table.header != expected) {
    fail(ErrorKind::Schema, path.filename().string() + ": header must be station_id,latitude,longitude,elevation,ruca");
  }
  StationRegistry reg;
  for (const auto& row : table.rows) {
    std::ostringstream ctx;
    ctx << path.filename().string() << " row " << row.line;
    Station s;
    s.station_id = row.cells[0];
    if (s.station_id.empty()) fail(ErrorKind::Parse, ctx.str() + ": empty station_id");
    s.latitude = csv::to_double(row.cells[1], ctx.str() + " latitude");
    s.longitude = csv::to_double(row.cells[2], ctx.str() + " longitude");
    if (!row.cells[3].empty()) s.elevation = csv::to_double(row.cells[3], ctx.str() + " elevation");
    if (!row.cells[4].empty()) {
      const auto r = csv::to_int(row.cells[4], ctx.str() + " ruca");
      if (r < 1 || r > 10) fail(ErrorKind::Validation, ctx.str() + ": ruca out of [1,10]");
      s.ruca = static_cast<int>(r);
    }
    try {
      reg.add(std::move(s));
    } catch (const Error& e) {
      fail(e.kind(), ctx.str() + ": " + e.what());
    }
  }
  return reg;
}

StationRegistry filter_for_clustering(const StationRegistry& registry, const FeatureSelection& features) {
  features.validate();
  StationRegistry out;
  for (const auto& s : registry.stations()) {
    if (features.elevation && !s.elevation) continue;
    if (features.urbanization && !s.ruca) continue;
    out.add(s);
  }
  return out;
}

}  // namespace aqtriad
