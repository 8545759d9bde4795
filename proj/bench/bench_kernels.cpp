#include <benchmark/benchmark.h>
#include <omp.h>

#include <numeric>
#include <random>
#include <vector>

#include "aqtriad/kernels.hpp"
#include "aqtriad/rng.hpp"

using namespace aqtriad;

namespace {

struct Fixture {
  nn::StackedBiRnn net;
  kernels::WindowSet data;
  std::vector<std::size_t> indices;
};

Fixture make_fixture(std::size_t hidden, std::size_t samples) {
  Fixture f;
  f.net = nn::StackedBiRnn({nn::CellKind::Lstm, 11, hidden, 2, 0.25});
  Rng rng(7);
  f.net.init_uniform(rng);
  f.data.steps = 13;
  f.data.input = 11;
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> w(f.data.window_size());
  for (std::size_t i = 0; i < samples; ++i) {
    for (auto& v : w) v = n(rng);
    f.data.push_back(w, n(rng));
  }
  f.indices.resize(samples);
  std::iota(f.indices.begin(), f.indices.end(), std::size_t{0});
  return f;
}

void BM_GradientSerial(benchmark::State& st) {
  auto f = make_fixture(static_cast<std::size_t>(st.range(0)), 64);
  std::vector<double> grad(f.net.size());
  for (auto _ : st) {
    benchmark::DoNotOptimize(kernels::serial::batch_gradient(f.net, f.data, f.indices, nn::Mode::Train, 1, grad));
  }
  st.SetItemsProcessed(st.iterations() * 64);
}

void BM_GradientParallel(benchmark::State& st) {
  auto f = make_fixture(static_cast<std::size_t>(st.range(0)), 64);
  std::vector<double> grad(f.net.size());
  for (auto _ : st) {
    benchmark::DoNotOptimize(kernels::parallel::batch_gradient(f.net, f.data, f.indices, nn::Mode::Train, 1, grad));
  }
  st.SetItemsProcessed(st.iterations() * 64);
  st.counters["threads"] = omp_get_max_threads();
}

void BM_PredictSerial(benchmark::State& st) {
  auto f = make_fixture(32, 512);
  for (auto _ : st) benchmark::DoNotOptimize(kernels::serial::batch_predict(f.net, f.data));
}

void BM_PredictParallel(benchmark::State& st) {
  auto f = make_fixture(32, 512);
  for (auto _ : st) benchmark::DoNotOptimize(kernels::parallel::batch_predict(f.net, f.data));
}

struct Points {
  std::vector<double> pts, cents;
  std::vector<int> labels;
  std::vector<double> dist;
};

Points make_points(std::size_t n, std::size_t k) {
  Points p;
  Rng rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  p.pts.resize(n * 4);
  p.cents.resize(k * 4);
  for (auto& v : p.pts) v = u(rng);
  for (auto& v : p.cents) v = u(rng);
  p.labels.resize(n);
  p.dist.resize(n);
  return p;
}

void BM_AssignSerial(benchmark::State& st) {
  auto p = make_points(static_cast<std::size_t>(st.range(0)), 25);
  for (auto _ : st) kernels::serial::assign_nearest(p.pts, 4, p.cents, p.labels, p.dist);
}

void BM_AssignParallel(benchmark::State& st) {
  auto p = make_points(static_cast<std::size_t>(st.range(0)), 25);
  for (auto _ : st) kernels::parallel::assign_nearest(p.pts, 4, p.cents, p.labels, p.dist);
}

}  // namespace

BENCHMARK(BM_GradientSerial)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GradientParallel)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PredictSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PredictParallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_AssignSerial)->Arg(1000)->Arg(100000);
BENCHMARK(BM_AssignParallel)->Arg(1000)->Arg(100000);

BENCHMARK_MAIN();
