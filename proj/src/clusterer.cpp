#include "aqtriad/clusterer.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>

#include "aqtriad/errors.hpp"
#include "aqtriad/kernels.hpp"
#include "aqtriad/rng.hpp"

namespace aqtriad {

std::vector<std::string> feature_columns(const FeatureSelection& sel) {
  sel.validate();
  std::vector<std::string> cols{"latitude", "longitude"};
  if (sel.elevation) cols.emplace_back("elevation");
  if (sel.urbanization) cols.emplace_back("ruca");
  return cols;
}

std::vector<double> raw_features(const Station& s, const FeatureSelection& sel) {
  std::vector<double> row{s.latitude, s.longitude};
  if (sel.elevation) {
    if (!s.elevation) fail(ErrorKind::Argument, "station " + s.station_id + " has no elevation");
    row.push_back(*s.elevation);
  }
  if (sel.urbanization) {
    if (!s.ruca) fail(ErrorKind::Argument, "station " + s.station_id + " has no ruca code");
    row.push_back(static_cast<double>(*s.ruca));
  }
  return row;
}

std::vector<double> normalize_features(std::span<const double> raw, std::span<const NormRange> norm_stats) {
  if (raw.size() != norm_stats.size()) fail(ErrorKind::Argument, "feature dimensionality mismatch");
  std::vector<double> out(raw.size());
  for (std::size_t j = 0; j < raw.size(); ++j) out[j] = norm_stats[j].apply(raw[j]);
  return out;
}

FeatureMatrix build_feature_matrix(const StationRegistry& registry, const FeatureSelection& features) {
  if (registry.size() < 2) fail(ErrorKind::Data, "clustering needs at least 2 stations");
  FeatureMatrix m;
  m.selection = features;
  m.columns = feature_columns(features);
  const std::size_t d = m.columns.size();
  std::vector<double> raw;
  raw.reserve(registry.size() * d);
  for (const auto& s : registry.stations()) {
    const auto r = raw_features(s, features);
    raw.insert(raw.end(), r.begin(), r.end());
    m.station_ids.push_back(s.station_id);
  }
  m.norm_stats.resize(d);
  for (std::size_t j = 0; j < d; ++j) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::size_t i = 0; i < m.rows(); ++i) {
      lo = std::min(lo, raw[i * d + j]);
      hi = std::max(hi, raw[i * d + j]);
    }
    m.norm_stats[j] = {lo, hi};
  }
  m.data.resize(raw.size());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      m.data[i * d + j] = std::clamp(m.norm_stats[j].apply(raw[i * d + j]), 0.0, 1.0);
    }
  }
  return m;
}

double kmeans_objective(std::span<const double> points, std::size_t dims, std::span<const int> labels,
                        std::span<const double> centroids) {
  double total = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double* c = centroids.data() + static_cast<std::size_t>(labels[i]) * dims;
    for (std::size_t j = 0; j < dims; ++j) {
      const double diff = points[i * dims + j] - c[j];
      total += diff * diff;
    }
  }
  return total;
}

namespace {

double sq_dist(const double* a, const double* b, std::size_t dims) {
  double d = 0.0;
  for (std::size_t j = 0; j < dims; ++j) {
    const double diff = a[j] - b[j];
    d += diff * diff;
  }
  return d;
}

std::vector<double> seed_plus_plus(std::span<const double> points, std::size_t dims, int k, Rng& rng) {
  const std::size_t n = points.size() / dims;
  std::vector<double> centroids;
  std::vector<bool> chosen(n, false);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::size_t first = pick(rng);
  chosen[first] = true;
  centroids.insert(centroids.end(), points.begin() + first * dims, points.begin() + (first + 1) * dims);
  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = sq_dist(points.data() + i * dims, points.data() + first * dims, dims);

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int c = 1; c < k; ++c) {
    const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
    std::size_t next = n;
    if (total > 0.0) {
      const double r = unit(rng) * total;
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        acc += d2[i];
        if (d2[i] > 0.0 && acc >= r) {
          next = i;
          break;
        }
      }
      if (next == n) {  // rounding at the tail
        for (std::size_t i = n; i-- > 0;) {
          if (d2[i] > 0.0) {
            next = i;
            break;
          }
        }
      }
    } else {
      for (std::size_t i = 0; i < n; ++i) {
        if (!chosen[i]) {
          next = i;
          break;
        }
      }
    }
    chosen[next] = true;
    const double* p = points.data() + next * dims;
    centroids.insert(centroids.end(), p, p + dims);
    for (std::size_t i = 0; i < n; ++i) d2[i] = std::min(d2[i], sq_dist(points.data() + i * dims, p, dims));
  }
  return centroids;
}

void recompute_means(std::span<const double> points, std::size_t dims, std::span<const int> labels, int k,
                     std::vector<double>& centroids, std::vector<std::size_t>& counts) {
  counts.assign(static_cast<std::size_t>(k), 0);
  std::vector<double> sums(static_cast<std::size_t>(k) * dims, 0.0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto c = static_cast<std::size_t>(labels[i]);
    ++counts[c];
    for (std::size_t j = 0; j < dims; ++j) sums[c * dims + j] += points[i * dims + j];
  }
  for (std::size_t c = 0; c < static_cast<std::size_t>(k); ++c) {
    if (counts[c] == 0) continue;
    for (std::size_t j = 0; j < dims; ++j) centroids[c * dims + j] = sums[c * dims + j] / static_cast<double>(counts[c]);
  }
}

KMeansResult run_restart(std::span<const double> points, std::size_t dims, const KMeansOptions& opt,
                         std::uint64_t seed) {
  const std::size_t n = points.size() / dims;
  const int k = opt.k;
  Rng rng(seed);
  KMeansResult res;
  res.k = k;
  res.centroids = seed_plus_plus(points, dims, k, rng);
  res.labels.assign(n, -1);
  std::vector<int> labels(n);
  std::vector<double> dist(n);
  std::vector<std::size_t> counts;

  for (int iter = 0; iter < opt.max_iter; ++iter) {
    kernels::serial::assign_nearest(points, dims, res.centroids, labels, dist);
    // empty-cluster repair: move the point farthest from its centroid
    counts.assign(static_cast<std::size_t>(k), 0);
    for (int l : labels) ++counts[static_cast<std::size_t>(l)];
    for (int c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] != 0) continue;
      std::size_t far = n;
      double far_d = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (counts[static_cast<std::size_t>(labels[i])] > 1 && dist[i] > far_d) {
          far_d = dist[i];
          far = i;
        }
      }
      --counts[static_cast<std::size_t>(labels[far])];
      labels[far] = c;
      counts[static_cast<std::size_t>(c)] = 1;
      dist[far] = 0.0;
      std::copy_n(points.begin() + far * dims, dims, res.centroids.begin() + static_cast<std::ptrdiff_t>(c * dims));
    }
    res.history.push_back(std::accumulate(dist.begin(), dist.end(), 0.0));
    const bool stable = labels == res.labels;
    res.labels = labels;
    recompute_means(points, dims, res.labels, k, res.centroids, counts);
    if (stable) break;
  }

  // Single-point transfers: moving x from A to B changes the objective by
  // |B|/(|B|+1) d(x,muB)^2 - |A|/(|A|-1) d(x,muA)^2.
  bool moved = true;
  while (moved) {
    moved = false;
    for (std::size_t i = 0; i < n; ++i) {
      const auto a = static_cast<std::size_t>(res.labels[i]);
      if (counts[a] <= 1) continue;
      const double* x = points.data() + i * dims;
      const double na = static_cast<double>(counts[a]);
      const double remove_gain = na / (na - 1.0) * sq_dist(x, res.centroids.data() + a * dims, dims);
      double best_delta = 0.0;
      std::size_t best = a;
      for (std::size_t b = 0; b < static_cast<std::size_t>(k); ++b) {
        if (b == a) continue;
        const double nb = static_cast<double>(counts[b]);
        const double delta = nb / (nb + 1.0) * sq_dist(x, res.centroids.data() + b * dims, dims) - remove_gain;
        if (delta < best_delta) {
          best_delta = delta;
          best = b;
        }
      }
      if (best != a && best_delta < -1e-12) {
        res.labels[i] = static_cast<int>(best);
        recompute_means(points, dims, res.labels, k, res.centroids, counts);
        moved = true;
      }
    }
    if (moved) res.history.push_back(kmeans_objective(points, dims, res.labels, res.centroids));
  }
  recompute_means(points, dims, res.labels, k, res.centroids, counts);
  res.objective = kmeans_objective(points, dims, res.labels, res.centroids);
  return res;
}

}  // namespace

KMeansResult kmeans_points(std::span<const double> points, std::size_t dims, const KMeansOptions& opt) {
  if (dims == 0 || points.size() % dims != 0) fail(ErrorKind::Argument, "point buffer not a multiple of dims");
  const std::size_t n = points.size() / dims;
  if (opt.k <= 0) fail(ErrorKind::Argument, "k must be positive");
  if (static_cast<std::size_t>(opt.k) > n) {
    fail(ErrorKind::Argument, "k=" + std::to_string(opt.k) + " exceeds " + std::to_string(n) + " points");
  }
  if (opt.restarts <= 0 || opt.max_iter <= 0) fail(ErrorKind::Argument, "restarts and max_iter must be positive");

  std::vector<KMeansResult> runs(static_cast<std::size_t>(opt.restarts));
  std::vector<std::exception_ptr> errors(runs.size());
#pragma omp parallel for schedule(dynamic)
  for (int r = 0; r < opt.restarts; ++r) {
    try {
      runs[r] = run_restart(points, dims, opt, mix_seed(opt.seed, static_cast<std::uint64_t>(r)));
    } catch (...) {
      errors[r] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::size_t best = 0;
  for (std::size_t r = 1; r < runs.size(); ++r) {
    if (runs[r].objective < runs[best].objective) best = r;
  }
  runs[best].best_restart = static_cast<int>(best);
  return std::move(runs[best]);
}

int Clustering::cluster_of(const std::string& station_id) const {
  for (std::size_t i = 0; i < station_ids.size(); ++i) {
    if (station_ids[i] == station_id) return assignment[i];
  }
  return -1;
}

std::vector<std::string> Clustering::members(int cluster) const {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < station_ids.size(); ++i) {
    if (assignment[i] == cluster) out.push_back(station_ids[i]);
  }
  return out;
}

std::vector<std::size_t> Clustering::cluster_sizes() const {
  std::vector<std::size_t> sizes(static_cast<std::size_t>(k), 0);
  for (int a : assignment) ++sizes[static_cast<std::size_t>(a)];
  return sizes;
}

Clustering kmeans(const FeatureMatrix& matrix, const KMeansOptions& opt) {
  const auto r = kmeans_points(matrix.data, matrix.dims(), opt);
  Clustering c;
  c.k = opt.k;
  c.selection = matrix.selection;
  c.columns = matrix.columns;
  c.norm_stats = matrix.norm_stats;
  c.station_ids = matrix.station_ids;
  c.assignment = r.labels;
  c.objective = r.objective;
  c.seed = opt.seed;
  c.restarts = opt.restarts;
  const std::size_t d = matrix.dims();
  for (int i = 0; i < opt.k; ++i) {
    c.centroids.emplace_back(r.centroids.begin() + i * static_cast<std::ptrdiff_t>(d),
                             r.centroids.begin() + (i + 1) * static_cast<std::ptrdiff_t>(d));
  }
  return c;
}

int assign_to_cluster(const Clustering& clustering, std::span<const double> feature_row) {
  if (clustering.centroids.empty()) fail(ErrorKind::Argument, "clustering has no centroids");
  if (feature_row.size() != clustering.centroids.front().size()) {
    fail(ErrorKind::Argument, "feature row has " + std::to_string(feature_row.size()) + " dims, clustering has " +
                                  std::to_string(clustering.centroids.front().size()));
  }
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < clustering.centroids.size(); ++c) {
    const double d = sq_dist(feature_row.data(), clustering.centroids[c].data(), feature_row.size());
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(c);
    }
  }
  return best;
}

nlohmann::json to_json(const Clustering& c) {
  nlohmann::json norm = nlohmann::json::array();
  for (std::size_t j = 0; j < c.norm_stats.size(); ++j) {
    norm.push_back({{"feature", c.columns[j]}, {"min", c.norm_stats[j].min}, {"max", c.norm_stats[j].max}});
  }
  nlohmann::json assign = nlohmann::json::array();
  for (std::size_t i = 0; i < c.station_ids.size(); ++i) {
    assign.push_back({{"station_id", c.station_ids[i]}, {"cluster", c.assignment[i]}});
  }
  return {{"k", c.k},
          {"feature_selection", c.selection.to_string()},
          {"norm_stats", norm},
          {"centroids", c.centroids},
          {"assignment", assign},
          {"objective", c.objective},
          {"seed", c.seed},
          {"restarts", c.restarts}};
}

Clustering clustering_from_json(const nlohmann::json& j) {
  Clustering c;
  c.k = j.at("k").get<int>();
  c.selection = FeatureSelection::parse(j.at("feature_selection").get<std::string>());
  for (const auto& n : j.at("norm_stats")) {
    c.columns.push_back(n.at("feature").get<std::string>());
    c.norm_stats.push_back({n.at("min").get<double>(), n.at("max").get<double>()});
  }
  c.centroids = j.at("centroids").get<std::vector<std::vector<double>>>();
  for (const auto& a : j.at("assignment")) {
    c.station_ids.push_back(a.at("station_id").get<std::string>());
    c.assignment.push_back(a.at("cluster").get<int>());
  }
  c.objective = j.at("objective").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.restarts = j.at("restarts").get<int>();
  if (static_cast<int>(c.centroids.size()) != c.k) fail(ErrorKind::Parse, "clustering centroid count != k");
  for (int a : c.assignment) {
    if (a < 0 || a >= c.k) fail(ErrorKind::Parse, "cluster index out of range in clustering file");
  }
  return c;
}

}  // namespace aqtriad
