#include "aqtriad/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "aqtriad/errors.hpp"
#include "aqtriad/nn/adam.hpp"
#include "aqtriad/rng.hpp"

namespace aqtriad {

void TrainConfig::validate() const {
  window.validate();
  if (epochs < 0) fail(ErrorKind::Config, "epochs must be >= 0");
  if (batch_size == 0) fail(ErrorKind::Config, "batch_size must be positive");
  if (!(learning_rate > 0.0)) fail(ErrorKind::Config, "learning_rate must be positive");
  if (!(beta1 > 0.0 && beta1 < 1.0 && beta2 > 0.0 && beta2 < 1.0)) fail(ErrorKind::Config, "Adam decay rates must lie in (0,1)");
  if (patience <= 0) fail(ErrorKind::Config, "patience must be positive");
  if (!(dropout >= 0.0 && dropout <= 0.5)) fail(ErrorKind::Config, "dropout must lie in [0, 0.5]");
  if (hidden == 0 || layers == 0) fail(ErrorKind::Config, "hidden and layers must be positive");
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0)) fail(ErrorKind::Config, "validation_fraction must lie in [0,1)");
  if (!(clip_norm >= 0.0)) fail(ErrorKind::Config, "clip_norm must be >= 0");
}

nn::NetworkShape TrainConfig::shape(std::size_t input) const {
  return {cell, input, hidden, layers, dropout};
}

namespace {

bool is_cyclic_degrees(Pollutant p, std::size_t v) { return variable_names(p)[v] == "wind_direction"; }
bool is_cyclic_hours(Pollutant p, std::size_t v) { return variable_names(p)[v] == "time_of_day"; }

}  // namespace

std::size_t expanded_dim(Pollutant p) { return variable_count(p) + 2; }

void expand_features(Pollutant p, std::span<const double> raw, double* out) {
  const std::size_t vars = variable_count(p);
  std::size_t k = 0;
  for (std::size_t v = 0; v < vars; ++v) {
    if (is_cyclic_degrees(p, v)) {
      const double a = raw[v] * std::numbers::pi / 180.0;
      out[k++] = std::sin(a);
      out[k++] = std::cos(a);
    } else if (is_cyclic_hours(p, v)) {
      const double a = raw[v] * 2.0 * std::numbers::pi / 24.0;
      out[k++] = std::sin(a);
      out[k++] = std::cos(a);
    } else {
      out[k++] = raw[v];
    }
  }
}

namespace {

NormStats fit_groups(std::span<const std::span<const TriadSample>> groups, Pollutant pollutant) {
  const std::size_t vars = variable_count(pollutant);
  const std::size_t dim = expanded_dim(pollutant);
  // Welford accumulators
  std::vector<double> mean(dim, 0.0), m2(dim, 0.0), row(dim);
  double count = 0.0;
  double t_mean = 0.0, t_m2 = 0.0, t_count = 0.0;
  for (const auto& samples : groups) {
    for (const auto& s : samples) {
      for (std::size_t off = 0; off + vars <= s.window.size(); off += vars) {
        expand_features(pollutant, std::span<const double>(s.window).subspan(off, vars), row.data());
        count += 1.0;
        for (std::size_t j = 0; j < dim; ++j) {
          const double d = row[j] - mean[j];
          mean[j] += d / count;
          m2[j] += d * (row[j] - mean[j]);
        }
      }
      t_count += 1.0;
      const double d = s.target - t_mean;
      t_mean += d / t_count;
      t_m2 += d * (s.target - t_mean);
    }
  }
  if (t_count == 0.0) fail(ErrorKind::Data, "cannot fit normalization on zero samples");
  auto stdev = [](double m2v, double n) {
    const double sd = std::sqrt(m2v / n);
    return sd > 1e-12 ? sd : 1.0;
  };
  NormStats ns;
  ns.feature_mean = mean;
  ns.feature_std.resize(dim);
  for (std::size_t j = 0; j < dim; ++j) ns.feature_std[j] = stdev(m2[j], count);
  ns.target_mean = t_mean;
  ns.target_std = stdev(t_m2, t_count);
  return ns;
}

}  // namespace

NormStats fit_norm_stats(std::span<const std::vector<TriadSample>> groups, Pollutant pollutant) {
  std::vector<std::span<const TriadSample>> views(groups.begin(), groups.end());
  return fit_groups(views, pollutant);
}

NormStats fit_norm_stats(std::span<const TriadSample> samples, Pollutant pollutant) {
  const std::span<const TriadSample> one[] = {samples};
  return fit_groups(one, pollutant);
}

void normalize_window(const NormStats& norm, Pollutant pollutant, std::span<const double> raw, std::size_t steps,
                      double* out) {
  const std::size_t vars = variable_count(pollutant);
  const std::size_t dim = expanded_dim(pollutant);
  if (raw.size() != steps * vars) fail(ErrorKind::Argument, "raw window size mismatch");
  for (std::size_t t = 0; t < steps; ++t) {
    double* o = out + t * dim;
    expand_features(pollutant, raw.subspan(t * vars, vars), o);
    for (std::size_t j = 0; j < dim; ++j) o[j] = (o[j] - norm.feature_mean[j]) / norm.feature_std[j];
  }
}

kernels::WindowSet make_window_set(std::span<const TriadSample> samples, const NormStats& norm, Pollutant pollutant,
                                   std::size_t steps) {
  kernels::WindowSet set;
  set.steps = steps;
  set.input = expanded_dim(pollutant);
  set.windows.resize(samples.size() * set.window_size());
  set.targets.resize(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    normalize_window(norm, pollutant, samples[i].window, steps, set.windows.data() + i * set.window_size());
    set.targets[i] = (samples[i].target - norm.target_mean) / norm.target_std;
  }
  return set;
}

bool ClusterDataset::any_empty() const {
  return std::any_of(by_role.begin(), by_role.end(), [](const auto& v) { return v.empty(); });
}

ClusterDataset build_cluster_dataset(const Clustering& clustering, int cluster, const AlignedDataset& dataset,
                                     std::span<const Date> train_dates, const WindowConfig& window) {
  if (cluster < 0 || cluster >= clustering.k) fail(ErrorKind::Argument, "cluster index out of range");
  ClusterDataset out;
  const std::size_t vars = variable_count(dataset.pollutant);
  for (const auto& id : clustering.members(cluster)) {
    const auto obs = dataset.observations.find(id);
    if (obs == dataset.observations.end() || !dataset.registry.contains(id)) continue;
    ++out.stations;
    for (const Date d : train_dates) {
      if (month_of(d) == 12) continue;
      const ForecastFile* f = dataset.forecast_for(d);
      if (f == nullptr) continue;
      for (auto& s : triad_windows(*f, obs->second, window, &out.stats)) {
        if (s.role == Role::Pre) {
          s.window = reverse_window(s.window, vars);
          s.reversed = true;
        }
        out.by_role[static_cast<int>(s.role)].push_back(std::move(s));
      }
    }
  }
  return out;
}

namespace {

double mean_eval_loss(const nn::StackedBiRnn& net, const kernels::WindowSet& data,
                      std::span<const std::size_t> indices) {
  if (indices.empty()) return 0.0;
  kernels::WindowSet subset;
  subset.steps = data.steps;
  subset.input = data.input;
  subset.windows.reserve(indices.size() * data.window_size());
  for (const auto i : indices) subset.push_back(data.window(i), data.targets[i]);
  const auto pred = kernels::parallel::batch_predict(net, subset);
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double e = pred[i] - subset.targets[i];
    sum += e * e;
  }
  return sum / static_cast<double>(pred.size());
}

}  // namespace

nn::StackedBiRnn train_network(const kernels::WindowSet& data, const TrainConfig& cfg, std::uint64_t seed,
                               TrainingLog& log) {
  cfg.validate();
  if (data.size() == 0) fail(ErrorKind::Training, "no training samples");
  Rng rng(seed);
  nn::StackedBiRnn net(cfg.shape(data.input));
  net.init_uniform(rng);

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  if (cfg.max_samples_per_role > 0 && order.size() > cfg.max_samples_per_role) {
    order.resize(cfg.max_samples_per_role);
  }
  const auto n_val = static_cast<std::size_t>(std::floor(cfg.validation_fraction * static_cast<double>(order.size())));
  std::vector<std::size_t> val(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
  std::vector<std::size_t> train(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
  std::sort(val.begin(), val.end());
  std::sort(train.begin(), train.end());

  log = TrainingLog{};
  log.train_samples = train.size();
  log.validation_samples = val.size();
  log.initial_train_loss = mean_eval_loss(net, data, train);
  log.best_validation_loss = mean_eval_loss(net, data, val);

  nn::Adam adam(net.size(), cfg.learning_rate, cfg.beta1, cfg.beta2);
  std::vector<double> grad(net.size());
  std::vector<double> best_params(net.params().begin(), net.params().end());
  int since_best = 0;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(train.begin(), train.end(), rng);
    double epoch_loss = 0.0;
    std::size_t batch_no = 0;
    for (std::size_t lo = 0; lo < train.size(); lo += cfg.batch_size, ++batch_no) {
      const std::size_t hi = std::min(train.size(), lo + cfg.batch_size);
      const std::span<const std::size_t> batch(train.data() + lo, hi - lo);
      epoch_loss += kernels::parallel::batch_gradient(net, data, batch, nn::Mode::Train,
                                                      mix_seed(seed, static_cast<std::uint64_t>(epoch), batch_no), grad);
      nn::clip_global_norm(grad, cfg.clip_norm);
      adam.step(net.params(), grad);
    }
    log.epochs_run = epoch;
    log.train_loss_history.push_back(epoch_loss / static_cast<double>(train.size()));

    if (val.empty()) {
      log.best_epoch = epoch;
      continue;
    }
    const double v = mean_eval_loss(net, data, val);
    log.validation_loss_history.push_back(v);
    if (v < log.best_validation_loss) {
      log.best_validation_loss = v;
      log.best_epoch = epoch;
      std::copy(net.params().begin(), net.params().end(), best_params.begin());
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      break;
    }
  }
  if (!val.empty()) std::copy(best_params.begin(), best_params.end(), net.params().begin());
  log.final_train_loss = mean_eval_loss(net, data, train);
  return net;
}

TriadModel train_triad(const ClusterDataset& data, const TrainConfig& cfg, Pollutant pollutant, int cluster) {
  cfg.validate();
  for (const Role r : kRoles) {
    if (data.role(r).empty()) {
      fail(ErrorKind::Training, std::string("no samples for the ") + to_string(r) + " network");
    }
  }
  TriadModel model;
  model.cluster = cluster;
  model.pollutant = pollutant;
  model.window = cfg.window;
  model.seed = cfg.seed;
  model.norm = fit_norm_stats(data.by_role, pollutant);
  for (const Role r : kRoles) {
    const int i = static_cast<int>(r);
    const auto set = make_window_set(data.by_role[i], model.norm, pollutant, static_cast<std::size_t>(cfg.window.steps()));
    model.nets[i] = train_network(set, cfg, mix_seed(cfg.seed, static_cast<std::uint64_t>(cluster), static_cast<std::uint64_t>(i)),
                                  model.logs[i]);
  }
  return model;
}

namespace {

std::optional<double> predict_one(const TriadModel& model, const StationForecast& sf, int hour, nn::Workspace& ws,
                                  std::vector<double>& input) {
  const std::size_t vars = variable_count(model.pollutant);
  const auto steps = static_cast<std::size_t>(model.window.steps());
  const auto iw = inference_window(hour, model.window);
  if (!std::all_of(sf.valid.begin() + iw.start, sf.valid.begin() + iw.start + static_cast<int>(steps),
                   [](bool v) { return v; })) {
    return std::nullopt;
  }
  input.resize(steps * expanded_dim(model.pollutant));
  const std::span<const double> raw(sf.values.data() + static_cast<std::size_t>(iw.start) * vars, steps * vars);
  if (iw.reversed) {
    normalize_window(model.norm, model.pollutant, reverse_window(raw, vars), steps, input.data());
  } else {
    normalize_window(model.norm, model.pollutant, raw, steps, input.data());
  }
  const double z = nn::birnn_forward(model.net(iw.role), input, steps, nn::Mode::Eval, nullptr, ws);
  return z * model.norm.target_std + model.norm.target_mean;
}

}  // namespace

std::array<std::optional<double>, kForecastFileHours> predict_file(const TriadModel& model, const ForecastFile& file,
                                                                    const std::string& station) {
  std::array<std::optional<double>, kForecastFileHours> out{};
  const StationForecast* sf = file.find(station);
  if (sf == nullptr) return out;
  nn::Workspace ws;
  std::vector<double> input;
  for (int hour = 0; hour < kForecastFileHours; ++hour) {
    out[static_cast<std::size_t>(hour)] = predict_one(model, *sf, hour, ws, input);
  }
  return out;
}

std::optional<double> predict_hour(const TriadModel& model, const ForecastFile& file, const std::string& station,
                                   int hour) {
  if (hour < 0 || hour >= kForecastFileHours) fail(ErrorKind::Argument, "hour out of [0,48)");
  const StationForecast* sf = file.find(station);
  if (sf == nullptr) return std::nullopt;
  nn::Workspace ws;
  std::vector<double> input;
  return predict_one(model, *sf, hour, ws, input);
}

nlohmann::json to_json(const NormStats& n) {
  return {{"feature_mean", n.feature_mean},
          {"feature_std", n.feature_std},
          {"target_mean", n.target_mean},
          {"target_std", n.target_std}};
}

NormStats norm_stats_from_json(const nlohmann::json& j) {
  NormStats n;
  n.feature_mean = j.at("feature_mean").get<std::vector<double>>();
  n.feature_std = j.at("feature_std").get<std::vector<double>>();
  n.target_mean = j.at("target_mean").get<double>();
  n.target_std = j.at("target_std").get<double>();
  return n;
}

namespace {

nlohmann::json to_json(const TrainingLog& l) {
  return {{"epochs_run", l.epochs_run},
          {"best_epoch", l.best_epoch},
          {"train_samples", l.train_samples},
          {"validation_samples", l.validation_samples},
          {"initial_train_loss", l.initial_train_loss},
          {"final_train_loss", l.final_train_loss},
          {"best_validation_loss", l.best_validation_loss},
          {"train_loss_history", l.train_loss_history},
          {"validation_loss_history", l.validation_loss_history}};
}

TrainingLog training_log_from_json(const nlohmann::json& j) {
  TrainingLog l;
  l.epochs_run = j.at("epochs_run").get<int>();
  l.best_epoch = j.at("best_epoch").get<int>();
  l.train_samples = j.at("train_samples").get<std::size_t>();
  l.validation_samples = j.at("validation_samples").get<std::size_t>();
  l.initial_train_loss = j.at("initial_train_loss").get<double>();
  l.final_train_loss = j.at("final_train_loss").get<double>();
  l.best_validation_loss = j.at("best_validation_loss").get<double>();
  l.train_loss_history = j.at("train_loss_history").get<std::vector<double>>();
  l.validation_loss_history = j.at("validation_loss_history").get<std::vector<double>>();
  return l;
}

}  // namespace

nlohmann::json to_json(const TriadModel& m) {
  nlohmann::json nets = nlohmann::json::object();
  nlohmann::json logs = nlohmann::json::object();
  for (const Role r : kRoles) {
    nets[to_string(r)] = nn::to_json(m.net(r));
    logs[to_string(r)] = to_json(m.logs[static_cast<int>(r)]);
  }
  return {{"version", kModelFormatVersion},
          {"cluster", m.cluster},
          {"pollutant", to_string(m.pollutant)},
          {"window_n", m.window.n},
          {"file_len", m.window.file_len},
          {"seed", m.seed},
          {"norm_stats", to_json(m.norm)},
          {"networks", nets},
          {"training", logs}};
}

TriadModel triad_model_from_json(const nlohmann::json& j) {
  const int version = j.at("version").get<int>();
  if (version > kModelFormatVersion) {
    fail(ErrorKind::Parse, "model format version " + std::to_string(version) + " is newer than supported");
  }
  TriadModel m;
  m.cluster = j.at("cluster").get<int>();
  m.pollutant = parse_pollutant(j.at("pollutant").get<std::string>());
  m.window.n = j.at("window_n").get<int>();
  m.window.file_len = j.at("file_len").get<int>();
  m.window.validate();
  m.seed = j.at("seed").get<std::uint64_t>();
  m.norm = norm_stats_from_json(j.at("norm_stats"));
  for (const Role r : kRoles) {
    m.nets[static_cast<int>(r)] = nn::network_from_json(j.at("networks").at(to_string(r)));
    if (j.contains("training")) m.logs[static_cast<int>(r)] = training_log_from_json(j.at("training").at(to_string(r)));
  }
  const std::size_t dim = expanded_dim(m.pollutant);
  for (const auto& net : m.nets) {
    if (net.shape().input != dim) fail(ErrorKind::Parse, "network input width does not match pollutant mode");
  }
  if (m.norm.feature_mean.size() != dim || m.norm.feature_std.size() != dim) {
    fail(ErrorKind::Parse, "normalization width does not match pollutant mode");
  }
  return m;
}

}  // namespace aqtriad
