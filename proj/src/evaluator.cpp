#include "aqtriad/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <sstream>

#include "aqtriad/csv.hpp"
#include "aqtriad/errors.hpp"

namespace aqtriad {
namespace {

void check_lengths(std::size_t a, std::size_t b, std::size_t m) {
  if (a != b || a != m) fail(ErrorKind::Argument, "metric inputs must have equal lengths");
}

}  // namespace

double rmse(std::span<const double> pred, std::span<const double> obs, std::span<const bool> mask) {
  check_lengths(pred.size(), obs.size(), mask.size());
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (!mask[i]) continue;
    const double e = pred[i] - obs[i];
    sum += e * e;
    ++n;
  }
  if (n == 0) fail(ErrorKind::UndefinedMetric, "RMSE over zero valid hours");
  return std::sqrt(sum / static_cast<double>(n));
}

double pearson(std::span<const double> pred, std::span<const double> obs, std::span<const bool> mask) {
  check_lengths(pred.size(), obs.size(), mask.size());
  double n = 0.0, mx = 0.0, my = 0.0, sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (!mask[i]) continue;
    n += 1.0;
    const double dx = pred[i] - mx;
    const double dy = obs[i] - my;
    mx += dx / n;
    my += dy / n;
    sxx += dx * (pred[i] - mx);
    syy += dy * (obs[i] - my);
    sxy += dx * (obs[i] - my);
  }
  if (n < 2.0) fail(ErrorKind::UndefinedMetric, "Pearson correlation needs at least two hours");
  if (sxx <= 0.0 || syy <= 0.0) fail(ErrorKind::UndefinedMetric, "Pearson correlation of a constant series");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::pair<std::optional<double>, std::optional<double>> max_concentration_delta(std::span<const double> pred,
                                                                                std::span<const double> obs,
                                                                                std::span<const bool> mask,
                                                                                int split_hour) {
  check_lengths(pred.size(), obs.size(), mask.size());
  auto interval = [&](std::size_t lo, std::size_t hi) -> std::optional<double> {
    double mp = -std::numeric_limits<double>::infinity();
    double mo = mp;
    bool any = false;
    for (std::size_t i = lo; i < hi && i < pred.size(); ++i) {
      if (!mask[i]) continue;
      any = true;
      mp = std::max(mp, pred[i]);
      mo = std::max(mo, obs[i]);
    }
    if (!any) return std::nullopt;
    return mp - mo;
  };
  const auto split = static_cast<std::size_t>(std::max(split_hour, 0));
  return {interval(0, split), interval(split, pred.size())};
}

std::optional<double> ScopeMetrics::reduction() const {
  if (!rmse.forecast || !rmse.corrected) return std::nullopt;
  return *rmse.forecast - *rmse.corrected;
}

std::optional<double> ScopeMetrics::relative_reduction() const {
  const auto r = reduction();
  if (!r || *rmse.forecast == 0.0) return std::nullopt;
  return *r / *rmse.forecast;
}

namespace {

template <class F>
std::optional<double> guarded(F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::UndefinedMetric) throw;
    return std::nullopt;
  }
}

std::optional<double> mean_of(const std::vector<double>& v) {
  if (v.empty()) return std::nullopt;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

ScopeMetrics scope_metrics(const std::string& scope, std::span<const PredictionRecord> records,
                           std::span<const std::size_t> idx) {
  ScopeMetrics m;
  m.scope = scope;
  std::vector<double> f, c, o;
  std::vector<bool> first24;
  for (const auto i : idx) {
    const auto& r = records[i];
    if (!r.paired()) {
      ++m.skipped_hours;
      continue;
    }
    ++m.evaluated_hours;
    f.push_back(*r.forecast);
    c.push_back(*r.corrected);
    o.push_back(*r.observed);
    first24.push_back(r.hour < 24);
  }
  const std::vector<bool> all(f.size(), true);
  // std::vector<bool> has no contiguous storage; copy into spans of bool
  const std::unique_ptr<bool[]> all_mask(new bool[all.size() + 1]);
  const std::unique_ptr<bool[]> first_mask(new bool[first24.size() + 1]);
  for (std::size_t i = 0; i < all.size(); ++i) {
    all_mask[i] = true;
    first_mask[i] = first24[i];
  }
  const std::span<const bool> am(all_mask.get(), all.size());
  const std::span<const bool> fm(first_mask.get(), first24.size());
  m.rmse.forecast = guarded([&] { return aqtriad::rmse(f, o, am); });
  m.rmse.corrected = guarded([&] { return aqtriad::rmse(c, o, am); });
  m.rmse_first24.forecast = guarded([&] { return aqtriad::rmse(f, o, fm); });
  m.rmse_first24.corrected = guarded([&] { return aqtriad::rmse(c, o, fm); });
  m.pearson.forecast = guarded([&] { return aqtriad::pearson(f, o, am); });
  m.pearson.corrected = guarded([&] { return aqtriad::pearson(c, o, am); });

  // daily peak deltas, averaged over station-days
  std::map<std::pair<std::string, Date>, std::vector<std::size_t>> days;
  for (const auto i : idx) days[{records[i].station_id, records[i].issue_date}].push_back(i);
  std::vector<double> df15, df33, dc15, dc33;
  for (const auto& [key, rows] : days) {
    std::vector<double> pf(kForecastFileHours, 0.0), pc(kForecastFileHours, 0.0), ob(kForecastFileHours, 0.0);
    bool mask[kForecastFileHours] = {};
    for (const auto i : rows) {
      const auto& r = records[i];
      if (!r.paired() || r.hour < 0 || r.hour >= kForecastFileHours) continue;
      pf[r.hour] = *r.forecast;
      pc[r.hour] = *r.corrected;
      ob[r.hour] = *r.observed;
      mask[r.hour] = true;
    }
    const auto [f1, f2] = max_concentration_delta(pf, ob, mask);
    const auto [c1, c2] = max_concentration_delta(pc, ob, mask);
    if (f1) df15.push_back(*f1);
    if (f2) df33.push_back(*f2);
    if (c1) dc15.push_back(*c1);
    if (c2) dc33.push_back(*c2);
  }
  m.max_delta_first15 = {mean_of(df15), mean_of(dc15)};
  m.max_delta_final33 = {mean_of(df33), mean_of(dc33)};
  return m;
}

}  // namespace

EvalReport build_report(std::span<const PredictionRecord> records, Pollutant pollutant) {
  EvalReport rep;
  rep.pollutant = pollutant;
  std::vector<std::string> order;
  std::map<std::string, std::vector<std::size_t>> by_station;
  std::vector<std::size_t> all(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    all[i] = i;
    auto& v = by_station[records[i].station_id];
    if (v.empty()) order.push_back(records[i].station_id);
    v.push_back(i);
  }
  rep.aggregate = scope_metrics("aggregate", records, all);
  for (const auto& id : order) rep.stations.push_back(scope_metrics(id, records, by_station[id]));
  return rep;
}

EvaluationResult evaluate(const std::map<int, TriadModel>& models, const Clustering& clustering,
                          const AlignedDataset& dataset, std::span<const Date> holdout_dates) {
  EvaluationResult out;
  std::vector<const ForecastFile*> files;
  for (const Date d : holdout_dates) {
    const ForecastFile* f = dataset.forecast_for(d);
    if (f == nullptr) fail(ErrorKind::Config, "holdout date " + format_date(d) + " has no forecast file");
    files.push_back(f);
  }
  const auto& stations = dataset.registry.stations();
  std::vector<const TriadModel*> station_model(stations.size(), nullptr);
  for (std::size_t s = 0; s < stations.size(); ++s) {
    int cluster = clustering.cluster_of(stations[s].station_id);
    if (cluster < 0) {
      try {
        const auto row = normalize_features(raw_features(stations[s], clustering.selection), clustering.norm_stats);
        cluster = assign_to_cluster(clustering, row);
      } catch (const Error&) {
        out.report.warnings.push_back("station " + stations[s].station_id + ": lacks clustering features, skipped");
        continue;
      }
    }
    const auto it = models.find(cluster);
    if (it == models.end()) {
      out.report.warnings.push_back("station " + stations[s].station_id + ": no model for cluster " +
                                    std::to_string(cluster));
      continue;
    }
    station_model[s] = &it->second;
  }

  const std::size_t pairs = stations.size() * files.size();
  std::vector<std::vector<PredictionRecord>> blocks(pairs);
  const std::size_t var = pollutant_variable(dataset.pollutant);
  std::vector<std::exception_ptr> errors(pairs);
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t p = 0; p < static_cast<std::ptrdiff_t>(pairs); ++p) {
    try {
      const std::size_t s = static_cast<std::size_t>(p) / files.size();
      const ForecastFile& file = *files[static_cast<std::size_t>(p) % files.size()];
      const auto& id = stations[s].station_id;
      const auto& obs = dataset.observations.at(id);
      const StationForecast* sf = file.find(id);
      std::array<std::optional<double>, kForecastFileHours> corrected{};
      if (station_model[s] != nullptr) corrected = predict_file(*station_model[s], file, id);
      auto& block = blocks[static_cast<std::size_t>(p)];
      block.reserve(kForecastFileHours);
      for (int h = 0; h < kForecastFileHours; ++h) {
        PredictionRecord r;
        r.station_id = id;
        r.issue_date = file.issue_date;
        r.hour = h;
        r.observed = obs.at(forecast_hour_stamp(file.issue_date, h));
        if (sf != nullptr && sf->valid[h]) r.forecast = sf->hour(h, file.vars())[var];
        r.corrected = corrected[static_cast<std::size_t>(h)];
        block.push_back(std::move(r));
      }
    } catch (...) {
      errors[static_cast<std::size_t>(p)] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  for (auto& b : blocks) {
    for (auto& r : b) out.records.push_back(std::move(r));
  }
  auto warnings = std::move(out.report.warnings);
  out.report = build_report(out.records, dataset.pollutant);
  out.report.warnings = std::move(warnings);
  return out;
}

namespace {

std::string opt_cell(const std::optional<double>& v, int decimals) { return v ? csv::fixed(*v, decimals) : ""; }

std::optional<double> opt_parse(const std::string& cell, const std::string& ctx) {
  if (csv::is_missing(cell)) return std::nullopt;
  return csv::to_double(cell, ctx);
}

void write_atomically(const std::filesystem::path& path, const std::string& text) {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
    out << text;
    if (!out) fail(ErrorKind::Io, "write failed for " + path.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace

void write_predictions_csv(const std::filesystem::path& path, std::span<const PredictionRecord> records) {
  std::ostringstream out;
  out << "station_id,issue_date,hour,observed,forecast,corrected\n";
  for (const auto& r : records) {
    out << r.station_id << ',' << format_date(r.issue_date) << ',' << r.hour << ',' << opt_cell(r.observed, 6) << ','
        << opt_cell(r.forecast, 6) << ',' << opt_cell(r.corrected, 6) << '\n';
  }
  write_atomically(path, out.str());
}

std::vector<PredictionRecord> read_predictions_csv(const std::filesystem::path& path) {
  const auto table = csv::read(path);
  const std::vector<std::string> expected{"station_id", "issue_date", "hour", "observed", "forecast", "corrected"};
  if (table.header != expected) {
    fail(ErrorKind::Schema, path.filename().string() + ": header must be " +
                                "station_id,issue_date,hour,observed,forecast,corrected");
  }
  std::vector<PredictionRecord> out;
  for (const auto& row : table.rows) {
    const std::string ctx = path.filename().string() + " row " + std::to_string(row.line);
    PredictionRecord r;
    r.station_id = row.cells[0];
    r.issue_date = parse_date(row.cells[1]);
    r.hour = static_cast<int>(csv::to_int(row.cells[2], ctx));
    if (r.hour < 0 || r.hour >= kForecastFileHours) fail(ErrorKind::Parse, ctx + ": hour out of [0,47]");
    r.observed = opt_parse(row.cells[3], ctx);
    r.forecast = opt_parse(row.cells[4], ctx);
    r.corrected = opt_parse(row.cells[5], ctx);
    out.push_back(std::move(r));
  }
  return out;
}

void write_report_csv(const std::filesystem::path& path, const EvalReport& report) {
  std::ostringstream out;
  out << "scope,metric,forecast_value,corrected_value,delta\n";
  auto pair_row = [&](const std::string& scope, const char* metric, const MetricPair& p) {
    std::optional<double> delta;
    if (p.forecast && p.corrected) delta = *p.forecast - *p.corrected;
    out << scope << ',' << metric << ',' << opt_cell(p.forecast, 4) << ',' << opt_cell(p.corrected, 4) << ','
        << opt_cell(delta, 4) << '\n';
  };
  auto scope_rows = [&](const ScopeMetrics& m) {
    pair_row(m.scope, "rmse", m.rmse);
    out << m.scope << ",relative_reduction,,," << opt_cell(m.relative_reduction(), 4) << '\n';
    pair_row(m.scope, "rmse_first24", m.rmse_first24);
    pair_row(m.scope, "pearson", m.pearson);
    pair_row(m.scope, "max_delta_first15", m.max_delta_first15);
    pair_row(m.scope, "max_delta_final33", m.max_delta_final33);
    out << m.scope << ",evaluated_hours," << m.evaluated_hours << ',' << m.evaluated_hours << ",0\n";
    out << m.scope << ",skipped_hours," << m.skipped_hours << ',' << m.skipped_hours << ",0\n";
  };
  scope_rows(report.aggregate);
  for (const auto& s : report.stations) scope_rows(s);
  write_atomically(path, out.str());
}

std::string format_tables(std::span<const std::pair<std::string, EvalReport>> reports) {
  std::ostringstream out;
  const std::string unit = reports.empty() ? "ozone" : to_string(reports.front().second.pollutant);
  std::vector<std::vector<std::string>> rows{{"RMSE (" + unit + ")"}, {"Forecast"}, {"Bias Corrected"}, {"Reduction"},
                                             {"Relative"}, {"Evaluated hours"}};
  for (const auto& [label, rep] : reports) {
    const auto& a = rep.aggregate;
    rows[0].push_back(label);
    rows[1].push_back(opt_cell(a.rmse.forecast, 4));
    rows[2].push_back(opt_cell(a.rmse.corrected, 4));
    rows[3].push_back(opt_cell(a.reduction(), 4));
    const auto rel = a.relative_reduction();
    rows[4].push_back(rel ? csv::fixed(*rel * 100.0, 1) + "%" : "");
    rows[5].push_back(std::to_string(a.evaluated_hours));
  }
  std::vector<std::size_t> width;
  for (const auto& r : rows) {
    for (std::size_t c = 0; c < r.size(); ++c) {
      if (width.size() <= c) width.push_back(0);
      width[c] = std::max(width[c], r[c].size());
    }
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out << '|';
    for (std::size_t c = 0; c < rows[i].size(); ++c) {
      out << ' ' << rows[i][c] << std::string(width[c] - rows[i][c].size(), ' ') << " |";
    }
    out << '\n';
    if (i == 0) {
      out << '|';
      for (const auto w : width) out << std::string(w + 2, '=') << '|';
      out << '\n';
    }
  }
  for (const auto& [label, rep] : reports) {
    for (const auto& w : rep.warnings) out << "warning (" << label << "): " << w << '\n';
  }
  return out.str();
}

void write_svg_plots(const std::filesystem::path& dir, std::span<const PredictionRecord> records) {
  std::filesystem::create_directories(dir);
  std::map<std::pair<std::string, Date>, std::vector<const PredictionRecord*>> days;
  for (const auto& r : records) days[{r.station_id, r.issue_date}].push_back(&r);
  constexpr double kW = 640, kH = 320, kPad = 40;
  for (const auto& [key, rows] : days) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto* r : rows) {
      for (const auto& v : {r->observed, r->forecast, r->corrected}) {
        if (v) {
          lo = std::min(lo, *v);
          hi = std::max(hi, *v);
        }
      }
    }
    if (!(hi > lo)) {
      lo -= 1.0;
      hi += 1.0;
    }
    auto x_of = [&](int h) { return kPad + (kW - 2 * kPad) * h / (kForecastFileHours - 1.0); };
    auto y_of = [&](double v) { return kH - kPad - (kH - 2 * kPad) * (v - lo) / (hi - lo); };
    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH << "\">\n";
    svg << "<text x=\"" << kPad << "\" y=\"20\" font-size=\"12\">" << key.first << ' ' << format_date(key.second)
        << "</text>\n";
    const std::pair<const char*, std::optional<double> PredictionRecord::*> series[] = {
        {"black", &PredictionRecord::observed}, {"#d62728", &PredictionRecord::forecast},
        {"#1f77b4", &PredictionRecord::corrected}};
    for (const auto& [color, member] : series) {
      svg << "<polyline fill=\"none\" stroke=\"" << color << "\" points=\"";
      for (const auto* r : rows) {
        if (const auto& v = r->*member) svg << csv::fixed(x_of(r->hour), 1) << ',' << csv::fixed(y_of(*v), 1) << ' ';
      }
      svg << "\"/>\n";
    }
    svg << "</svg>\n";
    std::ofstream out(dir / (key.first + "_" + format_date(key.second) + ".svg"), std::ios::binary);
    out << svg.str();
  }
}

}  // namespace aqtriad
