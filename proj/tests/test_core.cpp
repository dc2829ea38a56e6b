#include <gtest/gtest.h>

#include <cmath>

#include "metricseg/core.hpp"
#include "test_support.hpp"

using namespace metricseg;
using metricseg::testing::random_field;
using metricseg::testing::random_labels;
using metricseg::testing::same_partition;

TEST(VectorField, RejectsWrongDataLength) {
  EXPECT_THROW(VectorField(2, 2, 3, std::vector<double>(11)), ShapeError);
  EXPECT_THROW(VectorField(0, 2, 3), ShapeError);
}

TEST(BuildMetricGraph, L1DistanceOfTwoPixels) {
  VectorField f(1, 2, 2);
  f.at(0, 1)[0] = 1.0;
  f.at(0, 1)[1] = 2.0;
  const auto g = build_metric_graph(f, {{0, 1}});
  EXPECT_DOUBLE_EQ(g.weight(0, 0, 0), 3.0);
  EXPECT_TRUE(g.valid(0, 0, 0));
  EXPECT_FALSE(g.valid(0, 0, 1));
}

TEST(BuildMetricGraph, ConstantFieldHasZeroDistances) {
  const VectorField f(5, 6, 3, 0.7);
  const auto g = build_metric_graph(f, {{0, 1}, {1, 0}, {2, -3}, {4, 5}});
  for (double d : g.weights()) EXPECT_EQ(d, 0.0);
}

TEST(BuildMetricGraph, Errors) {
  const VectorField f(4, 4, 2);
  EXPECT_THROW(build_metric_graph(f, {}), ValueError);
  EXPECT_THROW(build_metric_graph(f, {{0, 4}}), ValueError);
  EXPECT_THROW(build_metric_graph(f, {{4, 0}}), ValueError);
  EXPECT_THROW(build_metric_graph(f, {{0, -1}}), ValueError);  // not canonical
  EXPECT_THROW(build_metric_graph(f, {{-1, 2}}), ValueError);
}

TEST(BuildMetricGraph, MasksOutOfBoundsEdges) {
  const auto f = random_field(5, 7, 2, 1.0, 3);
  const auto g = build_metric_graph(f, {{2, -3}});
  for (int y = 0; y < 5; ++y) {
    for (int x = 0; x < 7; ++x) {
      EXPECT_EQ(g.valid(0, y, x), y + 2 < 5 && x - 3 >= 0) << y << "," << x;
    }
  }
}

TEST(BuildMetricGraph, ChannelsMatchPairwiseL1AndAreNonNegative) {
  const auto f = random_field(8, 8, 4, 2.0, 17);
  const std::vector<EdgeOffset> offs{{0, 1}, {1, 0}, {3, -2}};
  const auto g = build_metric_graph(f, offs);
  for (std::size_t o = 0; o < offs.size(); ++o) {
    for (int y = 0; y < 8; ++y) {
      for (int x = 0; x < 8; ++x) {
        if (!g.valid(o, y, x)) continue;
        double d = 0.0;
        for (int k = 0; k < 4; ++k) d += std::abs(f.at(y, x)[k] - f.at(y + offs[o].dy, x + offs[o].dx)[k]);
        EXPECT_EQ(g.weight(o, y, x), d);
        EXPECT_GE(g.weight(o, y, x), 0.0);
      }
    }
  }
}

// Pairwise oracle over arbitrary pixels: the metric the channels sample.
TEST(BuildMetricGraph, TriangleInequalityOnRandomTriples) {
  const auto f = random_field(8, 8, 4, 3.0, 5);
  const auto g = build_metric_graph(f, {{0, 1}, {1, 0}});
  EXPECT_EQ(g.num_valid(), 2u * 8 * 7);
  auto dist = [&](std::size_t a, std::size_t b) {
    double d = 0.0;
    for (int k = 0; k < 4; ++k) d += std::abs(f.at(a)[k] - f.at(b)[k]);
    return d;
  };
  CounterRng rng(99);
  int violations = 0;
  for (int t = 0; t < 1000; ++t) {
    const auto i = rng.below(64), j = rng.below(64), k = rng.below(64);
    if (dist(i, k) > dist(i, j) + dist(j, k) + 1e-9) ++violations;
  }
  EXPECT_EQ(violations, 0);
}

TEST(MetricToAffinity, ExpOfNegativeDistance) {
  VectorField f(1, 3, 1);
  f.at(0, 1)[0] = 3.0;
  f.at(0, 2)[0] = 3.0;
  const auto a = metric_to_affinity(build_metric_graph(f, {{0, 1}}));
  EXPECT_NEAR(a.weight(0, 0, 0), 0.049787068367863944, 1e-15);
  EXPECT_EQ(a.weight(0, 0, 1), 1.0);
  EXPECT_FALSE(a.valid(0, 0, 2));
}

TEST(MetricToAffinity, MonotoneAndInvertible) {
  const auto f = random_field(10, 10, 3, 1.5, 8);
  const auto m = build_metric_graph(f, {{0, 1}, {1, 0}, {2, 2}});
  const auto a = metric_to_affinity(m);
  EXPECT_TRUE(std::equal(m.mask().begin(), m.mask().end(), a.mask().begin()));
  std::vector<std::pair<double, double>> pairs;
  for (std::size_t i = 0; i < m.weights().size(); ++i) {
    if (!m.mask()[i]) continue;
    const double d = m.weights()[i];
    const double back = -std::log(a.weights()[i]);
    EXPECT_LE(std::abs(back - d), 1e-9 * std::max(d, 1e-300)) << d;
    pairs.emplace_back(d, a.weights()[i]);
  }
  for (std::size_t i = 0; i + 1 < pairs.size(); ++i) {
    const auto& p = pairs[i];
    const auto& q = pairs[i + 1];
    if (p.first < q.first) {
      EXPECT_GT(p.second, q.second);
    }
    if (p.first > q.first) {
      EXPECT_LT(p.second, q.second);
    }
  }
}

TEST(RelabelConnected, SingleBlobKeepsOneLabel) {
  LabelMap m(4, 4);
  m(1, 1) = m(1, 2) = m(2, 1) = m(2, 2) = 5;
  const auto s = relabel_connected(m, 4);
  EXPECT_EQ(s.labels.objects().size(), 1u);
  EXPECT_EQ(s.to_original[s.labels(1, 1)], 5u);
  EXPECT_EQ(s.labels(0, 0), 0u);
}

TEST(RelabelConnected, DiagonalTouchSplitsUnderFourConnectivity) {
  LabelMap m(3, 3);
  m(0, 0) = 5;
  m(1, 1) = 5;
  const auto s4 = relabel_connected(m, 4);
  ASSERT_EQ(s4.labels.objects().size(), 2u);
  EXPECT_NE(s4.labels(0, 0), s4.labels(1, 1));
  EXPECT_EQ(s4.to_original[s4.labels(0, 0)], 5u);
  EXPECT_EQ(s4.to_original[s4.labels(1, 1)], 5u);
  EXPECT_EQ(relabel_connected(m, 8).labels.objects().size(), 1u);
}

TEST(RelabelConnected, MatchesFloodFillOracle) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto m = random_labels(16, 16, 3, seed);
    for (int conn : {4, 8}) {
      const auto s = relabel_connected(m, conn);
      auto comp = metricseg::testing::bfs_components(16, 16, conn, [&](int a, int b) { return m[a] == m[b]; });
      // background pixels collapse to one class in the relabeled map
      for (std::size_t i = 0; i < m.size(); ++i) {
        if (m[i] == 0) comp[i] = -1;
      }
      EXPECT_TRUE(same_partition(comp, metricseg::testing::to_vector(s.labels))) << seed << " conn " << conn;
      for (std::size_t i = 0; i < m.size(); ++i) EXPECT_EQ(s.to_original[s.labels[i]], m[i]);
    }
  }
}

TEST(RelabelConnected, Idempotent) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto once = relabel_connected(random_labels(12, 12, 4, seed)).labels;
    const auto twice = relabel_connected(once).labels;
    EXPECT_EQ(once, twice);  // first-touch numbering makes the renaming the identity
  }
}
