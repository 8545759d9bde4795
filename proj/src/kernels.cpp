#include "aqtriad/kernels.hpp"

#include <algorithm>
#include <limits>

#include "aqtriad/errors.hpp"

namespace aqtriad::kernels {

void WindowSet::push_back(std::span<const double> w, double target) {
  if (w.size() != window_size()) fail(ErrorKind::Argument, "window size mismatch");
  windows.insert(windows.end(), w.begin(), w.end());
  targets.push_back(target);
}

namespace {

double accumulate_range(const nn::StackedBiRnn& net, const WindowSet& data, std::span<const std::size_t> indices,
                        nn::Mode mode, std::uint64_t seed, std::span<double> grad, nn::Workspace& ws) {
  double loss = 0.0;
  const bool drop = mode == nn::Mode::Train && net.shape().dropout > 0.0;
  for (const std::size_t i : indices) {
    nn::DropoutMasks masks;
    if (drop) {
      Rng rng(mix_seed(seed, i));
      masks = nn::sample_dropout_masks(net.shape(), data.steps, rng);
    }
    loss += nn::birnn_backward(net, data.window(i), data.steps, data.targets[i], mode, drop ? &masks : nullptr, ws,
                               grad)
                .loss;
  }
  return loss;
}

double nearest(const double* p, std::size_t dims, std::span<const double> centroids, int& label) {
  const std::size_t k = centroids.size() / dims;
  double best = std::numeric_limits<double>::infinity();
  label = 0;
  for (std::size_t c = 0; c < k; ++c) {
    double d = 0.0;
    for (std::size_t j = 0; j < dims; ++j) {
      const double diff = p[j] - centroids[c * dims + j];
      d += diff * diff;
    }
    if (d < best) {
      best = d;
      label = static_cast<int>(c);
    }
  }
  return best;
}

}  // namespace

namespace serial {

double batch_gradient(const nn::StackedBiRnn& net, const WindowSet& data, std::span<const std::size_t> indices,
                      nn::Mode mode, std::uint64_t seed, std::span<double> grad) {
  std::fill(grad.begin(), grad.end(), 0.0);
  if (indices.empty()) return 0.0;
  nn::Workspace ws;
  const double loss = accumulate_range(net, data, indices, mode, seed, grad, ws);
  const double inv = 1.0 / static_cast<double>(indices.size());
  for (auto& g : grad) g *= inv;
  return loss;
}

std::vector<double> batch_predict(const nn::StackedBiRnn& net, const WindowSet& data) {
  std::vector<double> out(data.size());
  nn::Workspace ws;
  for (std::size_t i = 0; i < data.size(); ++i) {
    out[i] = nn::birnn_forward(net, data.window(i), data.steps, nn::Mode::Eval, nullptr, ws);
  }
  return out;
}

void assign_nearest(std::span<const double> points, std::size_t dims, std::span<const double> centroids,
                    std::span<int> labels, std::span<double> sq_dist) {
  const std::size_t n = points.size() / dims;
  for (std::size_t i = 0; i < n; ++i) sq_dist[i] = nearest(points.data() + i * dims, dims, centroids, labels[i]);
}

}  // namespace serial

namespace parallel {

double batch_gradient(const nn::StackedBiRnn& net, const WindowSet& data, std::span<const std::size_t> indices,
                      nn::Mode mode, std::uint64_t seed, std::span<double> grad) {
  std::fill(grad.begin(), grad.end(), 0.0);
  const std::size_t n = indices.size();
  if (n == 0) return 0.0;
  const std::size_t chunks = std::min(kGradientChunks, n);
  std::vector<std::vector<double>> partial(chunks);
  std::vector<double> losses(chunks, 0.0);

#pragma omp parallel
  {
    nn::Workspace ws;
#pragma omp for schedule(static)
    for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(chunks); ++c) {
      const std::size_t lo = n * static_cast<std::size_t>(c) / chunks;
      const std::size_t hi = n * (static_cast<std::size_t>(c) + 1) / chunks;
      partial[c].assign(grad.size(), 0.0);
      losses[c] = accumulate_range(net, data, indices.subspan(lo, hi - lo), mode, seed, partial[c], ws);
    }
  }

  double loss = 0.0;
  for (std::size_t c = 0; c < chunks; ++c) {
    loss += losses[c];
    const auto& p = partial[c];
    for (std::size_t j = 0; j < grad.size(); ++j) grad[j] += p[j];
  }
  const double inv = 1.0 / static_cast<double>(n);
  for (auto& g : grad) g *= inv;
  return loss;
}

std::vector<double> batch_predict(const nn::StackedBiRnn& net, const WindowSet& data) {
  std::vector<double> out(data.size());
#pragma omp parallel
  {
    nn::Workspace ws;
#pragma omp for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(data.size()); ++i) {
      out[i] = nn::birnn_forward(net, data.window(i), data.steps, nn::Mode::Eval, nullptr, ws);
    }
  }
  return out;
}

void assign_nearest(std::span<const double> points, std::size_t dims, std::span<const double> centroids,
                    std::span<int> labels, std::span<double> sq_dist) {
  const auto n = static_cast<std::ptrdiff_t>(points.size() / dims);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    sq_dist[i] = nearest(points.data() + i * dims, dims, centroids, labels[i]);
  }
}

}  // namespace parallel
}  // namespace aqtriad::kernels
