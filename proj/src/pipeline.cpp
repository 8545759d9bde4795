#include "aqtriad/pipeline.hpp"

#include <omp.h>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

#include "aqtriad/csv.hpp"
#include "aqtriad/errors.hpp"

namespace aqtriad {
namespace {

const std::set<std::string> kRunKeys = {
    "pollutant", "data", "stations", "observations", "forecast_dir", "features", "k", "restarts", "max_iter",
    "window", "epochs", "batch_size", "learning_rate", "beta1", "beta2", "patience", "dropout", "hidden", "layers",
    "cell", "validation_fraction", "clip_norm", "max_samples_per_role", "seed", "holdout", "out", "plots",
    "workers"};

std::string fmt_double(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::vector<Date> parse_date_list(const std::string& text) {
  std::vector<Date> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    const auto e = item.find_last_not_of(" \t");
    out.push_back(parse_date(item.substr(b, e - b + 1)));
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::string now_utc() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void apply_workers(const RunConfig& cfg) {
  if (cfg.workers > 0) omp_set_num_threads(cfg.workers);
}

std::string model_file_name(int cluster) { return "model_cluster_" + std::to_string(cluster) + ".json"; }

nlohmann::json run_manifest(const RunConfig& cfg, const std::string& command) {
  const auto kv = cfg.to_key_values();
  nlohmann::json j;
  j["command"] = command;
  j["seed"] = cfg.seed;
  nlohmann::json c = nlohmann::json::object();
  for (const auto& [k, v] : kv.values()) c[k] = v;
  j["config"] = c;
  char hash[20];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(config_hash(kv)));
  j["config_hash"] = hash;
  j["volatile"] = {{"written_at", now_utc()}};
  return j;
}

}  // namespace

RunConfig RunConfig::from_key_values(const KeyValues& kv) {
  kv.require_known(kRunKeys);
  RunConfig c;
  try {
    c.pollutant = parse_pollutant(kv.get("pollutant", "ozone"));
    if (kv.has("data")) {
      const std::filesystem::path d = kv.get("data", "");
      c.stations = d / "stations.csv";
      c.observations = d / "observations.csv";
      c.forecast_dir = d;
    }
    if (kv.has("stations")) c.stations = kv.get("stations", "");
    if (kv.has("observations")) c.observations = kv.get("observations", "");
    if (kv.has("forecast_dir")) c.forecast_dir = kv.get("forecast_dir", "");
    c.features = FeatureSelection::parse(kv.get("features", "lat_lon"));
    c.train.cell = nn::parse_cell_kind(kv.get("cell", "lstm"));
    const auto holdout = kv.get("holdout", "");
    if (holdout.rfind("auto:", 0) == 0) {
      c.holdout_auto = std::stoi(holdout.substr(5));
      if (c.holdout_auto <= 0) fail(ErrorKind::Config, "holdout auto count must be positive");
    } else if (holdout == "reference2019") {
      c.holdout = reference_holdout_dates_2019();
    } else {
      c.holdout = parse_date_list(holdout);
    }
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Config || e.kind() == ErrorKind::Argument) throw;
    fail(ErrorKind::Config, e.what());
  } catch (const std::exception& e) {
    fail(ErrorKind::Config, std::string("bad holdout: ") + e.what());
  }
  c.k = static_cast<int>(kv.get_int("k", c.k));
  c.restarts = static_cast<int>(kv.get_int("restarts", c.restarts));
  c.max_iter = static_cast<int>(kv.get_int("max_iter", c.max_iter));
  c.seed = kv.get_u64("seed", c.seed);
  c.out = kv.get("out", c.out.string());
  c.plots = kv.get_bool("plots", c.plots);
  c.workers = static_cast<int>(kv.get_int("workers", c.workers));

  auto& t = c.train;
  t.window.n = static_cast<int>(kv.get_int("window", t.window.n));
  t.epochs = static_cast<int>(kv.get_int("epochs", t.epochs));
  const auto batch = kv.get_int("batch_size", static_cast<std::int64_t>(t.batch_size));
  if (batch <= 0) fail(ErrorKind::Config, "batch_size must be positive");
  t.batch_size = static_cast<std::size_t>(batch);
  t.learning_rate = kv.get_double("learning_rate", t.learning_rate);
  t.beta1 = kv.get_double("beta1", t.beta1);
  t.beta2 = kv.get_double("beta2", t.beta2);
  t.patience = static_cast<int>(kv.get_int("patience", t.patience));
  t.dropout = kv.get_double("dropout", t.dropout);
  const auto hidden = kv.get_int("hidden", static_cast<std::int64_t>(t.hidden));
  const auto layers = kv.get_int("layers", static_cast<std::int64_t>(t.layers));
  if (hidden <= 0 || layers <= 0) fail(ErrorKind::Config, "hidden and layers must be positive");
  t.hidden = static_cast<std::size_t>(hidden);
  t.layers = static_cast<std::size_t>(layers);
  t.validation_fraction = kv.get_double("validation_fraction", t.validation_fraction);
  t.clip_norm = kv.get_double("clip_norm", t.clip_norm);
  t.max_samples_per_role = kv.get_u64("max_samples_per_role", t.max_samples_per_role);
  t.seed = c.seed;
  c.validate();
  return c;
}

KeyValues RunConfig::to_key_values() const {
  KeyValues kv;
  kv.set("pollutant", to_string(pollutant));
  kv.set("stations", stations.string());
  kv.set("observations", observations.string());
  kv.set("forecast_dir", forecast_dir.string());
  kv.set("features", features.to_string());
  kv.set("k", std::to_string(k));
  kv.set("restarts", std::to_string(restarts));
  kv.set("max_iter", std::to_string(max_iter));
  kv.set("window", std::to_string(train.window.n));
  kv.set("epochs", std::to_string(train.epochs));
  kv.set("batch_size", std::to_string(train.batch_size));
  kv.set("learning_rate", fmt_double(train.learning_rate));
  kv.set("beta1", fmt_double(train.beta1));
  kv.set("beta2", fmt_double(train.beta2));
  kv.set("patience", std::to_string(train.patience));
  kv.set("dropout", fmt_double(train.dropout));
  kv.set("hidden", std::to_string(train.hidden));
  kv.set("layers", std::to_string(train.layers));
  kv.set("cell", nn::to_string(train.cell));
  kv.set("validation_fraction", fmt_double(train.validation_fraction));
  kv.set("clip_norm", fmt_double(train.clip_norm));
  kv.set("max_samples_per_role", std::to_string(train.max_samples_per_role));
  kv.set("seed", std::to_string(seed));
  if (holdout_auto > 0) {
    kv.set("holdout", "auto:" + std::to_string(holdout_auto));
  } else {
    std::string h;
    for (const auto d : holdout) h += (h.empty() ? "" : ",") + format_date(d);
    kv.set("holdout", h);
  }
  kv.set("out", out.string());
  kv.set("plots", plots ? "true" : "false");
  return kv;
}

void RunConfig::validate() const {
  features.validate();
  if (k <= 0) fail(ErrorKind::Argument, "k must be positive");
  if (restarts <= 0 || max_iter <= 0) fail(ErrorKind::Config, "restarts and max_iter must be positive");
  if (workers < 0) fail(ErrorKind::Config, "workers must be >= 0");
  train.validate();
}

std::uint64_t config_hash(const KeyValues& kv) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& [k, v] : kv.values()) {
    for (const char c : k + "=" + v + "\n") {
      h ^= static_cast<unsigned char>(c);
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

std::vector<Date> auto_holdout(const AlignedDataset& dataset, int count) {
  std::vector<Date> candidates;
  for (std::size_t i = 1; i < dataset.forecasts.size(); ++i) {
    const Date d = dataset.forecasts[i].issue_date;
    if (month_of(d) != 12) candidates.push_back(d);
  }
  if (count <= 0) return {};
  if (static_cast<std::size_t>(count) > candidates.size()) {
    fail(ErrorKind::Config, "holdout auto:" + std::to_string(count) + " exceeds the " +
                                std::to_string(candidates.size()) + " eligible forecast files");
  }
  std::vector<Date> out;
  const double m = static_cast<double>(candidates.size());
  for (int i = 0; i < count; ++i) {
    out.push_back(candidates[static_cast<std::size_t>((i + 0.5) * m / count)]);
  }
  return out;
}

AlignedDataset load_dataset(const RunConfig& cfg) {
  for (const auto& [name, p] : {std::pair{"stations", cfg.stations}, {"observations", cfg.observations},
                                {"forecast_dir", cfg.forecast_dir}}) {
    if (p.empty()) fail(ErrorKind::Config, std::string(name) + " path not set");
    if (!std::filesystem::exists(p)) fail(ErrorKind::Config, std::string(name) + " path does not exist: " + p.string());
  }
  auto registry = load_station_metadata(cfg.stations);
  auto observations = load_observations(cfg.observations, cfg.pollutant);
  auto forecasts = load_forecast_dir(cfg.forecast_dir, cfg.pollutant);
  return align(registry, std::move(observations), std::move(forecasts));
}

std::vector<Date> resolve_holdout(const RunConfig& cfg, const AlignedDataset& dataset) {
  if (cfg.holdout_auto > 0) return auto_holdout(dataset, cfg.holdout_auto);
  return cfg.holdout;
}

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) fail(ErrorKind::Io, "cannot create directory " + path.parent_path().string());
  }
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
    out << text;
    out.flush();
    if (!out) fail(ErrorKind::Io, "write failed for " + path.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) fail(ErrorKind::Io, "cannot rename " + tmp + ": " + ec.message());
}

nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot read " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Parse, path.filename().string() + ": " + e.what());
  }
}

SynthSummary cmd_synth(const SynthConfig& cfg, const std::filesystem::path& out) { return generate_world(cfg, out); }

Clustering cmd_cluster(const RunConfig& cfg, std::string* summary) {
  apply_workers(cfg);
  if (cfg.stations.empty() || !std::filesystem::exists(cfg.stations)) {
    fail(ErrorKind::Config, "station metadata not found: " + cfg.stations.string());
  }
  const auto registry = filter_for_clustering(load_station_metadata(cfg.stations), cfg.features);
  if (static_cast<std::size_t>(cfg.k) > registry.size()) {
    fail(ErrorKind::Argument, "k=" + std::to_string(cfg.k) + " exceeds the " + std::to_string(registry.size()) +
                                  " stations with the selected features");
  }
  const auto matrix = build_feature_matrix(registry, cfg.features);
  const auto clustering = kmeans(matrix, {cfg.k, cfg.seed, cfg.restarts, cfg.max_iter});
  write_text_atomic(cfg.clustering_path(), to_json(clustering).dump(2) + "\n");
  auto manifest = run_manifest(cfg, "cluster");
  manifest["outputs"] = {"clustering.json"};
  write_text_atomic(cfg.out / "cluster_manifest.json", manifest.dump(2) + "\n");
  if (summary != nullptr) {
    std::ostringstream s;
    s << "clusters: " << clustering.k << "  stations: " << clustering.station_ids.size()
      << "  objective: " << csv::fixed(clustering.objective, 6) << "\nsizes:";
    for (const auto n : clustering.cluster_sizes()) s << ' ' << n;
    s << '\n';
    *summary = s.str();
  }
  return clustering;
}

TrainResult cmd_train(const RunConfig& cfg, std::string* summary) {
  apply_workers(cfg);
  if (!std::filesystem::exists(cfg.clustering_path())) {
    fail(ErrorKind::Config, "clustering not found: " + cfg.clustering_path().string() + " (run cluster first)");
  }
  const auto clustering = clustering_from_json(read_json(cfg.clustering_path()));
  const auto dataset = load_dataset(cfg);
  const auto split = holdout_split(dataset, resolve_holdout(cfg, dataset));

  TrainResult result;
  std::ostringstream s;
  nlohmann::json models = nlohmann::json::array();
  std::error_code ec;
  std::filesystem::create_directories(cfg.model_dir(), ec);
  std::filesystem::remove(cfg.model_dir() / "manifest.json", ec);
  for (int c = 0; c < clustering.k; ++c) {
    const auto data = build_cluster_dataset(clustering, c, dataset, split.train, cfg.train.window);
    if (data.any_empty()) {
      const std::string w = "cluster " + std::to_string(c) + ": no training samples for at least one role, skipped";
      result.warnings.push_back(w);
      s << "warning: " << w << '\n';
      continue;
    }
    auto model = train_triad(data, cfg.train, cfg.pollutant, c);
    write_text_atomic(cfg.model_dir() / model_file_name(c), to_json(model).dump() + "\n");
    nlohmann::json entry = {{"cluster", c}, {"file", model_file_name(c)}, {"stations", data.stations}};
    for (const Role r : kRoles) {
      const auto& log = model.logs[static_cast<int>(r)];
      entry["samples"][to_string(r)] = data.role(r).size();
      entry["epochs_run"][to_string(r)] = log.epochs_run;
    }
    models.push_back(entry);
    s << "cluster " << c << ": stations " << data.stations;
    for (const Role r : kRoles) {
      const auto& log = model.logs[static_cast<int>(r)];
      s << "  " << to_string(r) << " n=" << data.role(r).size() << " epochs=" << log.epochs_run
        << " loss " << csv::fixed(log.initial_train_loss, 4) << "->" << csv::fixed(log.final_train_loss, 4);
    }
    s << '\n';
    result.models.emplace(c, std::move(model));
  }
  if (result.models.empty()) fail(ErrorKind::Data, "every cluster is empty of training samples");

  auto manifest = run_manifest(cfg, "train");
  manifest["models"] = models;
  manifest["warnings"] = result.warnings;
  manifest["format_version"] = kModelFormatVersion;
  std::string holdout;
  for (const auto d : split.test) holdout += (holdout.empty() ? "" : ",") + format_date(d);
  manifest["holdout_dates"] = holdout;
  write_text_atomic(cfg.model_dir() / "manifest.json", manifest.dump(2) + "\n");
  if (summary != nullptr) *summary = s.str();
  return result;
}

std::map<int, TriadModel> load_models(const std::filesystem::path& model_dir) {
  const auto manifest_path = model_dir / "manifest.json";
  if (!std::filesystem::exists(manifest_path)) {
    fail(ErrorKind::Config, "model manifest not found: " + manifest_path.string() + " (run train first)");
  }
  const auto manifest = read_json(manifest_path);
  std::map<int, TriadModel> out;
  for (const auto& entry : manifest.at("models")) {
    auto model = triad_model_from_json(read_json(model_dir / entry.at("file").get<std::string>()));
    const int c = model.cluster;
    out.emplace(c, std::move(model));
  }
  return out;
}

EvaluationResult cmd_evaluate(const RunConfig& cfg, std::string* summary) {
  apply_workers(cfg);
  if (!std::filesystem::exists(cfg.clustering_path())) {
    fail(ErrorKind::Config, "clustering not found: " + cfg.clustering_path().string());
  }
  const auto clustering = clustering_from_json(read_json(cfg.clustering_path()));
  const auto models = load_models(cfg.model_dir());
  const auto dataset = load_dataset(cfg);
  const auto holdout = resolve_holdout(cfg, dataset);
  if (holdout.empty()) fail(ErrorKind::Data, "no holdout dates to evaluate");
  const auto split = holdout_split(dataset, holdout);
  auto result = evaluate(models, clustering, dataset, split.test);
  if (result.report.aggregate.evaluated_hours == 0) fail(ErrorKind::Data, "no evaluable hours in the holdout files");
  for (const auto& m : models) {
    if (m.second.pollutant != cfg.pollutant) fail(ErrorKind::Config, "model pollutant does not match the run config");
  }

  const auto dir = cfg.eval_dir();
  std::filesystem::create_directories(dir);
  write_report_csv(dir / "report.csv", result.report);
  write_predictions_csv(dir / "predictions.csv", result.records);
  const std::pair<std::string, EvalReport> labelled[] = {{"triad", result.report}};
  const auto tables = format_tables(labelled);
  write_text_atomic(dir / "tables.txt", tables);
  if (cfg.plots) write_svg_plots(dir / "plots", result.records);
  auto manifest = run_manifest(cfg, "evaluate");
  manifest["outputs"] = {"report.csv", "tables.txt", "predictions.csv"};
  manifest["warnings"] = result.report.warnings;
  write_text_atomic(dir / "manifest.json", manifest.dump(2) + "\n");
  if (summary != nullptr) *summary = tables;
  return result;
}

std::string cmd_report(const std::vector<std::pair<std::string, std::filesystem::path>>& inputs, Pollutant pollutant,
                       const std::filesystem::path& out) {
  if (inputs.empty()) fail(ErrorKind::Argument, "report needs at least one predictions file");
  std::vector<std::pair<std::string, EvalReport>> reports;
  for (const auto& [label, path] : inputs) {
    const auto records = read_predictions_csv(path);
    auto rep = build_report(records, pollutant);
    if (rep.aggregate.evaluated_hours == 0) fail(ErrorKind::Data, path.string() + ": no evaluable hours");
    reports.emplace_back(label, std::move(rep));
  }
  const auto tables = format_tables(reports);
  if (!out.empty()) {
    std::filesystem::create_directories(out);
    write_text_atomic(out / "tables.txt", tables);
    for (const auto& [label, rep] : reports) write_report_csv(out / ("report_" + label + ".csv"), rep);
  }
  return tables;
}

}  // namespace aqtriad
