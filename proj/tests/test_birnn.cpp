#include <gtest/gtest.h>

#include <random>

#include "aqtriad/nn/adam.hpp"
#include "aqtriad/nn/birnn.hpp"
#include "aqtriad/rng.hpp"
#include "test_util.hpp"

using namespace aqtriad;
using namespace aqtriad::nn;

namespace {

std::vector<double> random_window(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> d(0, 1);
  std::vector<double> w(n);
  for (auto& v : w) v = d(rng);
  return w;
}

StackedBiRnn random_net(const NetworkShape& s, std::uint64_t seed) {
  StackedBiRnn net(s);
  Rng rng(seed);
  net.init_uniform(rng);
  return net;
}

// independent shape walk
std::size_t walk_count(CellKind k, std::size_t in, std::size_t h, std::size_t layers) {
  const std::size_t g = k == CellKind::Lstm ? 4 : 3;
  std::size_t total = 0;
  for (std::size_t l = 0; l < layers; ++l) {
    const std::size_t li = l == 0 ? in : 2 * h;
    total += 2 * (g * h * li + g * h * h + g * h);
  }
  return total + 2 * h + 1;
}

}  // namespace

TEST(BiRnn, ParamCountMatchesShapeWalk) {
  for (const auto k : {CellKind::Lstm, CellKind::Gru}) {
    for (const std::size_t in : {8u, 11u}) {
      EXPECT_EQ(param_count({k, in, 200, 5, 0.25}), walk_count(k, in, 200, 5));
      EXPECT_EQ(StackedBiRnn({k, in, 16, 2, 0.25}).size(), walk_count(k, in, 16, 2));
    }
  }
}

TEST(BiRnn, ZeroNetworkEmitsHeadBias) {
  StackedBiRnn net({CellKind::Lstm, 4, 6, 3, 0.25});
  net.set_head_bias(0.375);
  EXPECT_EQ(birnn_forward(net, random_window(20, 1), 5), 0.375);
  StackedBiRnn gru({CellKind::Gru, 4, 6, 3, 0.25});
  EXPECT_EQ(birnn_forward(gru, random_window(20, 2), 5), 0.0);
}

TEST(BiRnn, EvalIsDeterministic) {
  const auto net = random_net({CellKind::Lstm, 4, 8, 2, 0.5}, 3);
  const auto w = random_window(28, 4);
  EXPECT_EQ(birnn_forward(net, w, 7), birnn_forward(net, w, 7));
  Rng rng(1);
  EXPECT_EQ(birnn_forward(net, w, 7, Mode::Eval, rng), birnn_forward(net, w, 7));
}

TEST(BiRnn, MatchesHandUnrolledOracle) {
  for (const auto k : {CellKind::Lstm, CellKind::Gru}) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const auto net = random_net({k, 3, 2, 1, 0.0}, seed);
      const auto w = random_window(9, seed + 50);
      EXPECT_NEAR(birnn_forward(net, w, 3), aqtest::oracle_birnn_forward(net, w, 3), 1e-10);
    }
    const auto deep = random_net({k, 4, 5, 3, 0.25}, 9);
    const auto w = random_window(24, 10);
    EXPECT_NEAR(birnn_forward(deep, w, 6), aqtest::oracle_birnn_forward(deep, w, 6), 1e-10);
  }
}

TEST(BiRnn, GradientMatchesFiniteDifferences) {
  for (const auto k : {CellKind::Lstm, CellKind::Gru}) {
    for (const auto mode : {Mode::Eval, Mode::Train}) {
      const auto r = aqtest::gradient_check(k, 77, 2, 8, 5, 4, mode);
      EXPECT_EQ(r.failures, 0u) << to_string(k) << " max rel " << r.max_rel_error;
      EXPECT_EQ(r.checked, param_count({k, 4, 8, 2, 0.0}));
    }
  }
}

TEST(BiRnn, ZeroLossAtTargetAndHeadBiasGradient) {
  const auto net = random_net({CellKind::Lstm, 4, 8, 2, 0.0}, 5);
  const auto w = random_window(20, 6);
  Workspace ws;
  const double pred = birnn_forward(net, w, 5, Mode::Eval, nullptr, ws);
  std::vector<double> grad(net.size(), 0.0);
  const auto lp = birnn_backward(net, w, 5, pred, Mode::Eval, nullptr, ws, grad);
  EXPECT_EQ(lp.loss, 0.0);
  for (const double g : grad) EXPECT_EQ(g, 0.0);

  std::fill(grad.begin(), grad.end(), 0.0);
  const auto lq = birnn_backward(net, w, 5, pred - 1.5, Mode::Eval, nullptr, ws, grad);
  EXPECT_DOUBLE_EQ(grad[net.head_offset() + 16], 2.0 * (lq.prediction - (pred - 1.5)));
  EXPECT_DOUBLE_EQ(lq.loss, 1.5 * 1.5);
}

TEST(BiRnn, GradientAccumulates) {
  const auto net = random_net({CellKind::Gru, 3, 4, 2, 0.0}, 8);
  const auto w = random_window(12, 9);
  Workspace ws;
  std::vector<double> once(net.size(), 0.0), twice(net.size(), 0.0);
  birnn_backward(net, w, 4, 0.3, Mode::Eval, nullptr, ws, once);
  birnn_backward(net, w, 4, 0.3, Mode::Eval, nullptr, ws, twice);
  birnn_backward(net, w, 4, 0.3, Mode::Eval, nullptr, ws, twice);
  for (std::size_t i = 0; i < net.size(); ++i) EXPECT_NEAR(twice[i], 2 * once[i], 1e-14);
}

TEST(BiRnn, InitializationRanges) {
  const auto net = random_net({CellKind::Lstm, 5, 16, 2, 0.25}, 12);
  for (std::size_t l = 0; l < 2; ++l) {
    for (int d = 0; d < 2; ++d) {
      const auto c = net.cell(l, d);
      for (std::size_t k = 0; k < 16; ++k) {
        EXPECT_EQ(c.b[16 + k], 1.0);  // forget gate
        EXPECT_LE(std::abs(c.b[k]), 0.25);
      }
      for (std::size_t i = 0; i < 64 * c.input; ++i) EXPECT_LE(std::abs(c.w[i]), 0.25);
    }
  }
  const auto p = net.params();
  for (std::size_t i = 0; i < 32; ++i) EXPECT_LE(std::abs(p[net.head_offset() + i]), 1.0 / std::sqrt(32.0));
  EXPECT_EQ(net.head_bias(), 0.0);
}

TEST(BiRnn, EmptyWindowAndMissingMasks) {
  const auto net = random_net({CellKind::Lstm, 2, 3, 2, 0.25}, 1);
  Workspace ws;
  EXPECT_EQ(aqtest::error_kind([&] { birnn_forward(net, std::vector<double>{}, 0, Mode::Eval, nullptr, ws); }),
            ErrorKind::Argument);
  EXPECT_EQ(aqtest::error_kind([&] { birnn_forward(net, random_window(6, 1), 3, Mode::Train, nullptr, ws); }),
            ErrorKind::Argument);
}

TEST(Dropout, DegenerateAndEval) {
  Rng rng(1);
  const auto v = random_window(1000, 2);
  EXPECT_EQ(apply_dropout(v, 0.0, rng, Mode::Train), v);
  EXPECT_EQ(apply_dropout(v, 0.0, rng, Mode::Eval), v);
  EXPECT_EQ(apply_dropout(v, 0.25, rng, Mode::Eval), v);
  EXPECT_EQ(aqtest::error_kind([&] { apply_dropout(v, 1.0, rng, Mode::Train); }), ErrorKind::Argument);
}

TEST(Dropout, LawOfLargeNumbers) {
  Rng rng(99);
  const std::vector<double> ones(1000000, 1.0);
  const auto out = apply_dropout(ones, 0.25, rng, Mode::Train);
  std::size_t kept = 0;
  double sum = 0.0;
  for (const double x : out) {
    if (x != 0.0) {
      ++kept;
      EXPECT_DOUBLE_EQ(x, 1.0 / 0.75);
    }
    sum += x;
  }
  EXPECT_NEAR(static_cast<double>(kept) / out.size(), 0.75, 0.005);
  EXPECT_NEAR(sum / out.size(), 1.0, 0.01);
}

TEST(Optim, ClipGlobalNorm) {
  std::vector<double> g{3.0, 4.0};
  EXPECT_DOUBLE_EQ(clip_global_norm(g, 5.0), 5.0);
  EXPECT_EQ(g, (std::vector<double>{3.0, 4.0}));
  EXPECT_DOUBLE_EQ(clip_global_norm(g, 1.0), 5.0);
  EXPECT_NEAR(g[0], 0.6, 1e-15);
  EXPECT_NEAR(g[1], 0.8, 1e-15);
}

TEST(Optim, AdamFirstStepIsSignTimesLearningRate) {
  Adam adam(3, 0.01);
  std::vector<double> p{1.0, 2.0, 3.0};
  const std::vector<double> g{0.5, -2.0, 0.0};
  adam.step(p, g);
  EXPECT_NEAR(p[0], 1.0 - 0.01, 1e-9);
  EXPECT_NEAR(p[1], 2.0 + 0.01, 1e-9);
  EXPECT_DOUBLE_EQ(p[2], 3.0);
  EXPECT_EQ(adam.steps(), 1);
}

TEST(Optim, AdamMinimizesQuadratic) {
  Adam adam(2, 0.05);
  std::vector<double> p{3.0, -2.0}, g(2);
  for (int i = 0; i < 2000; ++i) {
    g[0] = 2 * (p[0] - 1.0);
    g[1] = 2 * (p[1] + 0.5);
    adam.step(p, g);
  }
  EXPECT_NEAR(p[0], 1.0, 1e-3);
  EXPECT_NEAR(p[1], -0.5, 1e-3);
}

TEST(BiRnn, JsonRoundTrip) {
  const auto net = random_net({CellKind::Gru, 4, 3, 2, 0.1}, 6);
  const auto back = network_from_json(to_json(net));
  EXPECT_TRUE(back == net);
  EXPECT_EQ(to_json(back).dump(), to_json(net).dump());
}
