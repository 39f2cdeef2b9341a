#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "cgnn/graph.hpp"
#include "support.hpp"

using namespace cgnn;

TEST_CASE("random network edge counts") {
  CHECK(generate_random_network(4, 0.0, 7).num_edges() == 0);
  CHECK(generate_random_network(4, 1.0, 7).num_edges() == 6);

  const Network g = generate_random_network(200, 0.05, 1);
  const double pairs = 200.0 * 199.0 / 2.0;
  const double mean = 0.05 * pairs;
  const double sd = std::sqrt(pairs * 0.05 * 0.95);
  CHECK(mean == doctest::Approx(995.0));
  CHECK(std::abs(static_cast<double>(g.num_edges()) - mean) <= 4.0 * sd);
}

TEST_CASE("random network is reproducible per seed") {
  CHECK(generate_random_network(100, 0.1, 5) == generate_random_network(100, 0.1, 5));
  CHECK_FALSE(generate_random_network(100, 0.1, 5) == generate_random_network(100, 0.1, 6));
  CHECK_THROWS_AS(generate_random_network(10, 1.5, 0), InvalidValueError);
}

TEST_CASE("neighbor lists are sorted and symmetric") {
  const Network g = generate_random_network(60, 0.15, 3);
  std::size_t total = 0;
  for (NodeId i = 0; i < g.num_nodes(); ++i) {
    auto nb = g.neighbors(i);
    total += nb.size();
    CHECK(std::is_sorted(nb.begin(), nb.end()));
    for (NodeId j : nb) {
      CHECK(j != i);
      CHECK(g.has_edge(j, i));
      CHECK(g.edge_slot(i, j) != Network::npos);
    }
  }
  CHECK(total == 2 * g.num_edges());
}

TEST_CASE("network construction rejects invalid edges") {
  CHECK_THROWS_AS(Network(3, {{1, 1}}), GraphError);
  CHECK_THROWS_AS(Network(3, {{0, 3}}), GraphError);
  CHECK_THROWS_AS(Network(3, {{0, 1}, {1, 0}}), GraphError);
  const Network g(3, {{2, 0}});
  CHECK(g.has_edge(0, 2));
  CHECK(g.edges().front().u == 0);
}

TEST_CASE("shuffled edges keep node and edge counts") {
  const Network g = generate_random_network(80, 0.1, 2);
  const Network s = shuffle_edges(g, 9);
  CHECK(s.num_nodes() == g.num_nodes());
  CHECK(s.num_edges() == g.num_edges());
  CHECK_FALSE(s == g);
  CHECK(empty_network(5).num_edges() == 0);
}

TEST_CASE("node split") {
  const Network g = empty_network(10);
  const NodeSplit s = split_nodes(g, 0.8, 4);
  CHECK(s.train.size() == 8);
  CHECK(s.test.size() == 2);
  std::vector<NodeId> all = s.train;
  all.insert(all.end(), s.test.begin(), s.test.end());
  std::sort(all.begin(), all.end());
  CHECK(all == all_nodes(10));

  const NodeSplit again = split_nodes(g, 0.8, 4);
  CHECK(again.train == s.train);
  CHECK(again.test == s.test);

  CHECK_THROWS_AS(split_nodes(g, 0.999, 4), InvalidValueError);
  CHECK_THROWS_AS(split_nodes(g, 0.0, 4), InvalidValueError);
}

TEST_CASE("dataset validation") {
  const Network g = testing::small_network();
  FeatureMatrix x(testing::small_features());
  Vector t(6), y(6);
  t << 1, 0, 1, 0, 0, 1;
  y.setZero();
  CHECK_NOTHROW(ObservationalDataset(g, x, t, y));
  t[2] = 0.5;
  CHECK_THROWS_AS(ObservationalDataset(g, x, t, y), InvalidValueError);
  t[2] = 1.0;
  CHECK_THROWS_AS(ObservationalDataset(g, x, t, Vector::Zero(5)), DimensionError);
  CHECK_THROWS_AS(ObservationalDataset(empty_network(4), x), DimensionError);

  Matrix bad = testing::small_features();
  bad(1, 1) = std::nan("");
  CHECK_THROWS_AS(FeatureMatrix{bad}, InvalidValueError);
}
