#include <gtest/gtest.h>

#include <random>

#include "aqtriad/clusterer.hpp"
#include "aqtriad/rng.hpp"
#include "test_util.hpp"

using namespace aqtriad;

namespace {

StationRegistry make_registry(const std::vector<std::array<double, 3>>& rows) {
  StationRegistry reg;
  int i = 0;
  for (const auto& r : rows) reg.add({"S" + std::to_string(i++), r[0], r[1], r[2], 1 + i % 10, 0});
  return reg;
}

}  // namespace

TEST(FeatureMatrix, TwoPointMinMax) {
  const auto reg = make_registry({{40, -100, 0}, {41, -101, 10}});
  const auto m = build_feature_matrix(reg, FeatureSelection::parse("lat_lon,elevation"));
  ASSERT_EQ(m.dims(), 3u);
  EXPECT_DOUBLE_EQ(m.row(0)[2], 0.0);
  EXPECT_DOUBLE_EQ(m.row(1)[2], 1.0);
}

TEST(FeatureMatrix, ConstantColumnIsZero) {
  const auto reg = make_registry({{40, -100, 5}, {41, -101, 5}, {42, -100, 5}});
  const auto m = build_feature_matrix(reg, FeatureSelection::parse("lat_lon,elevation"));
  for (std::size_t i = 0; i < m.rows(); ++i) EXPECT_EQ(m.row(i)[2], 0.0);
}

TEST(FeatureMatrix, RandomEntriesInUnitInterval) {
  Rng rng(11);
  std::uniform_real_distribution<double> lat(25, 49), lon(-125, -67), el(0, 3000);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::array<double, 3>> rows;
    for (int i = 0; i < 30; ++i) rows.push_back({lat(rng), lon(rng), el(rng)});
    const auto m = build_feature_matrix(make_registry(rows), FeatureSelection::parse("lat_lon,elevation,urbanization"));
    for (const double v : m.data) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
}

TEST(FeatureMatrix, NeedsTwoStations) {
  EXPECT_EQ(aqtest::error_kind([] { build_feature_matrix(make_registry({{40, -100, 1}}), {}); }), ErrorKind::Data);
}

TEST(KMeans, KEqualsN) {
  const std::vector<double> pts{0, 0, 1, 1};
  const auto r = kmeans_points(pts, 2, {2, 1, 5, 100});
  EXPECT_EQ(r.objective, 0.0);
  EXPECT_NE(r.labels[0], r.labels[1]);
}

TEST(KMeans, SingleClusterByHand) {
  const std::vector<double> pts{0, 0, 2, 0};
  const auto r = kmeans_points(pts, 2, {1, 1, 3, 100});
  EXPECT_DOUBLE_EQ(r.centroids[0], 1.0);
  EXPECT_DOUBLE_EQ(r.centroids[1], 0.0);
  EXPECT_DOUBLE_EQ(r.objective, 2.0);
}

TEST(KMeans, MatchesExhaustiveOptimumOnSixPoints) {
  Rng rng(5);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> pts(12);
    for (auto& v : pts) v = u(rng);
    const auto r = kmeans_points(pts, 2, {2, static_cast<std::uint64_t>(trial), 20, 300});
    EXPECT_NEAR(r.objective, aqtest::brute_force_kmeans(pts, 2, 2), 1e-9) << "trial " << trial;
  }
}

TEST(KMeans, SolutionIsLocallyOptimalAndObjectiveConsistent) {
  Rng rng(9);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> pts(3 * 40);
    for (auto& v : pts) v = u(rng);
    const auto r = kmeans_points(pts, 3, {5, static_cast<std::uint64_t>(trial), 4, 300});
    EXPECT_TRUE(aqtest::lloyd_locally_optimal(pts, 3, r.labels, r.centroids, 5));
    EXPECT_NEAR(r.objective, kmeans_objective(pts, 3, r.labels, r.centroids), 1e-12);
    // no single transfer lowers the objective
    for (std::size_t i = 0; i < 40; ++i) {
      for (int c = 0; c < 5; ++c) {
        auto lab = r.labels;
        if (lab[i] == c) continue;
        lab[i] = c;
        std::vector<double> sum(15, 0.0);
        std::vector<int> cnt(5, 0);
        for (std::size_t p = 0; p < 40; ++p) {
          ++cnt[lab[p]];
          for (int d = 0; d < 3; ++d) sum[lab[p] * 3 + d] += pts[p * 3 + d];
        }
        if (std::find(cnt.begin(), cnt.end(), 0) != cnt.end()) continue;
        for (int q = 0; q < 5; ++q) {
          for (int d = 0; d < 3; ++d) sum[q * 3 + d] /= cnt[q];
        }
        EXPECT_GE(kmeans_objective(pts, 3, lab, sum), r.objective - 1e-12);
      }
    }
  }
}

TEST(KMeans, ObjectiveHistoryNeverIncreases) {
  Rng rng(21);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<double> pts(2 * 200);
  for (auto& v : pts) v = u(rng);
  const auto r = kmeans_points(pts, 2, {8, 3, 5, 300});
  ASSERT_FALSE(r.history.empty());
  for (std::size_t i = 1; i < r.history.size(); ++i) EXPECT_LE(r.history[i], r.history[i - 1] + 1e-12);
}

TEST(KMeans, DeterministicAcrossThreadCounts) {
  Rng rng(4);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<double> pts(2 * 300);
  for (auto& v : pts) v = u(rng);
  const auto a = kmeans_points(pts, 2, {6, 17, 10, 300});
  const auto b = kmeans_points(pts, 2, {6, 17, 10, 300});
  EXPECT_EQ(a.labels, b.labels);
  EXPECT_EQ(a.centroids, b.centroids);
  EXPECT_EQ(a.objective, b.objective);
}

TEST(KMeans, ArgumentErrors) {
  const std::vector<double> pts{0, 0, 1, 1};
  EXPECT_EQ(aqtest::error_kind([&] { kmeans_points(pts, 2, {3, 1, 1, 10}); }), ErrorKind::Argument);
  EXPECT_EQ(aqtest::error_kind([&] { kmeans_points(pts, 2, {0, 1, 1, 10}); }), ErrorKind::Argument);
  EXPECT_EQ(aqtest::error_kind([&] { kmeans_points(pts, 2, {1, 1, 0, 10}); }), ErrorKind::Argument);
}

TEST(Clustering, AssignToCluster) {
  Clustering c;
  c.k = 4;
  c.centroids = {{0.0, 0.0}, {1.0, 0.0}, {3.0, 0.0}, {0.5, 0.5}};
  EXPECT_EQ(assign_to_cluster(c, std::vector<double>{0.5, 0.5}), 3);
  EXPECT_EQ(assign_to_cluster(c, std::vector<double>{2.0, 0.0}), 1);  // equidistant from 1 and 2
  Rng rng(2);
  std::uniform_real_distribution<double> u(-1, 4);
  for (int t = 0; t < 200; ++t) {
    const std::vector<double> row{u(rng), u(rng)};
    int best = 0;
    double bd = 1e300;
    for (int j = 0; j < 4; ++j) {
      const double d = (row[0] - c.centroids[j][0]) * (row[0] - c.centroids[j][0]) +
                       (row[1] - c.centroids[j][1]) * (row[1] - c.centroids[j][1]);
      if (d < bd) {
        bd = d;
        best = j;
      }
    }
    EXPECT_EQ(assign_to_cluster(c, row), best);
  }
  EXPECT_EQ(aqtest::error_kind([&] { assign_to_cluster(c, std::vector<double>{1.0}); }), ErrorKind::Argument);
}

TEST(Clustering, JsonRoundTripAndMembership) {
  std::vector<std::array<double, 3>> rows;
  for (int i = 0; i < 12; ++i) rows.push_back({30.0 + (i % 3) * 8 + 0.1 * i, -110.0 + (i % 3) * 15, 100.0 * i});
  const auto reg = make_registry(rows);
  const auto m = build_feature_matrix(reg, FeatureSelection::parse("lat_lon,elevation"));
  const auto c = kmeans(m, {3, 42, 10, 300});
  std::size_t total = 0;
  for (const auto n : c.cluster_sizes()) total += n;
  EXPECT_EQ(total, 12u);
  for (const auto& id : c.station_ids) EXPECT_GE(c.cluster_of(id), 0);
  EXPECT_EQ(c.cluster_of("nope"), -1);
  const auto back = clustering_from_json(to_json(c));
  EXPECT_EQ(to_json(back).dump(), to_json(c).dump());
  EXPECT_EQ(back.assignment, c.assignment);
  EXPECT_EQ(back.selection, c.selection);
}
