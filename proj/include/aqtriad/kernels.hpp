#pragma once

// Data-parallel inner loops. Each kernel has a serial reference under
// kernels::serial and an OpenMP version under kernels::parallel; tests check
// that they agree and bench_kernels compares their speed.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "aqtriad/nn/birnn.hpp"

namespace aqtriad::kernels {

/// Normalized training windows stored contiguously: size() windows of
/// steps x input values each, with one scalar target per window.
struct WindowSet {
  std::size_t steps = 0;
  std::size_t input = 0;
  std::vector<double> windows;
  std::vector<double> targets;

  std::size_t size() const { return targets.size(); }
  std::size_t window_size() const { return steps * input; }
  std::span<const double> window(std::size_t i) const { return {windows.data() + i * window_size(), window_size()}; }
  void push_back(std::span<const double> w, double target);
};

/// Dropout masks for sample `i` are drawn from a stream seeded by
/// mix_seed(seed, i), so results do not depend on the thread schedule.
/// Writes the mean gradient over `indices` into `grad` and returns the summed loss.
namespace serial {
double batch_gradient(const nn::StackedBiRnn& net, const WindowSet& data, std::span<const std::size_t> indices,
                      nn::Mode mode, std::uint64_t seed, std::span<double> grad);
std::vector<double> batch_predict(const nn::StackedBiRnn& net, const WindowSet& data);
void assign_nearest(std::span<const double> points, std::size_t dims, std::span<const double> centroids,
                    std::span<int> labels, std::span<double> sq_dist);
}  // namespace serial

namespace parallel {
/// Splits `indices` into a fixed number of contiguous chunks reduced in
/// order, so the result is bit-identical for any thread count.
double batch_gradient(const nn::StackedBiRnn& net, const WindowSet& data, std::span<const std::size_t> indices,
                      nn::Mode mode, std::uint64_t seed, std::span<double> grad);
std::vector<double> batch_predict(const nn::StackedBiRnn& net, const WindowSet& data);
void assign_nearest(std::span<const double> points, std::size_t dims, std::span<const double> centroids,
                    std::span<int> labels, std::span<double> sq_dist);
}  // namespace parallel

inline constexpr std::size_t kGradientChunks = 8;

}  // namespace aqtriad::kernels
