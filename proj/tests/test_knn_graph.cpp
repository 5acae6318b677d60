#include "superpart/graph.hpp"
#include "superpart/kdtree.hpp"

#include "test_util.hpp"

#include <gtest/gtest.h>

#include <omp.h>

using namespace superpart;
using testing_util::brute_knn;
using testing_util::random_points;

namespace {

std::set<std::pair<NodeId, NodeId>> edge_set(const AdjacencyGraph& g) {
  std::set<std::pair<NodeId, NodeId>> s;
  for (const Edge& e : g.edges) s.emplace(e.u, e.v);
  return s;
}

}  // namespace

TEST(KdTree, MatchesBruteForceIncludingTies) {
  // Integer lattice: lots of exactly equal distances.
  std::vector<Vec3> pts;
  for (int x = 0; x < 9; ++x) {
    for (int y = 0; y < 9; ++y) {
      for (int z = 0; z < 5; ++z) pts.emplace_back(x, y, z);
    }
  }
  const KdTree tree(pts, 4);
  for (std::size_t i = 0; i < pts.size(); i += 7) {
    const auto got = tree.knn(pts[i], 10, static_cast<NodeId>(i));
    const auto want = brute_knn(pts, i, 10);
    ASSERT_EQ(got.size(), want.size());
    for (std::size_t r = 0; r < want.size(); ++r) EXPECT_EQ(got[r].index, want[r]) << "query " << i;
  }
}

TEST(KnnAll, TreeAndBruteForcePathsAgree) {
  for (std::size_t n : {50u, 255u, 256u, 1500u}) {
    const auto pts = random_points(n, n);
    const auto nn = knn_all(pts, 6);
    ASSERT_EQ(nn.size(), n * 6);
    for (std::size_t i = 0; i < n; i += 13) {
      const auto want = brute_knn(pts, i, 6);
      for (std::size_t r = 0; r < 6; ++r) EXPECT_EQ(nn[i * 6 + r], want[r]);
    }
  }
  EXPECT_THROW(knn_all(random_points(4, 1), 4), InvalidInputError);
}

TEST(KnnAll, IndependentOfThreadCount) {
  const auto pts = random_points(5000, 77);
  const int saved = omp_get_max_threads();
  omp_set_num_threads(1);
  const auto one = knn_all(pts, 8);
  omp_set_num_threads(8);
  const auto eight = knn_all(pts, 8);
  omp_set_num_threads(saved);
  EXPECT_EQ(one, eight);
}

TEST(BuildKnnGraph, CollinearTriple) {
  const std::vector<Vec3> pts{Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(2.5, 0, 0)};
  const AdjacencyGraph g = build_knn_graph(pts, GraphConfig{1});
  EXPECT_EQ(g.n_nodes, 3u);
  EXPECT_EQ(g.edges, (std::vector<Edge>{{0, 1, 1.0}, {1, 2, 1.0}}));
}

TEST(BuildKnnGraph, UnitSquareHasNoDiagonals) {
  const std::vector<Vec3> pts{Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(1, 1, 0), Vec3(0, 1, 0)};
  const AdjacencyGraph g = build_knn_graph(pts, GraphConfig{2});
  for (std::size_t d : g.degrees()) EXPECT_GE(d, 2u);
  const auto s = edge_set(g);
  EXPECT_FALSE(s.count({0, 2}));
  EXPECT_FALSE(s.count({1, 3}));
  EXPECT_EQ(s.size(), 4u);
}

TEST(BuildKnnGraph, EqualsBruteForceSymmetrization) {
  const auto pts = random_points(200, 5);
  const AdjacencyGraph g = build_knn_graph(pts, GraphConfig{8});
  EXPECT_EQ(edge_set(g), testing_util::brute_knn_edges(pts, 8));
  EXPECT_TRUE(g.is_canonical());
  g.validate();
  for (const Edge& e : g.edges) EXPECT_EQ(e.weight, 1.0);
  for (std::size_t d : g.degrees()) EXPECT_GE(d, 8u);
}

TEST(BuildKnnGraph, LargeCloudAgainstBruteForce) {
  const auto pts = random_points(3000, 6, 10.0);
  EXPECT_EQ(edge_set(build_knn_graph(pts, GraphConfig{5})), testing_util::brute_knn_edges(pts, 5));
}

TEST(BuildKnnGraph, TooFewPoints) {
  const auto pts = random_points(8, 1);
  EXPECT_THROW(build_knn_graph(pts, GraphConfig{8}), InvalidInputError);
  EXPECT_THROW(build_knn_graph(pts, GraphConfig{0}), InvalidInputError);
}

TEST(PrepareGraph, ConsolidatesAndReconnects) {
  const std::vector<Vec3> pos{Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(5, 0, 0)};
  AdjacencyGraph g;
  g.n_nodes = 3;
  g.edges = {{0, 0, 1.0}, {1, 2, 1.0}, {2, 1, 1.0}};
  const AdjacencyGraph out = prepare_graph(g, pos, 1);
  // (1,2) consolidated to weight 2, node 0 linked to its nearest centroid 1.
  EXPECT_EQ(out.edges, (std::vector<Edge>{{0, 1, 1.0}, {1, 2, 2.0}}));
  out.validate();
}

TEST(PrepareGraph, CleanGraphUnchanged) {
  const auto pts = random_points(300, 9);
  AdjacencyGraph g = build_knn_graph(pts, GraphConfig{4});
  for (std::size_t i = 0; i < g.edges.size(); ++i) g.edges[i].weight = 0.5 + static_cast<double>(i % 7);
  EXPECT_EQ(prepare_graph(g, pts, 4).edges, g.edges);
}

TEST(PrepareGraph, EmptyGraphBecomesNearestNeighborGraph) {
  const auto pts = random_points(5, 3);
  AdjacencyGraph g;
  g.n_nodes = 5;
  const AdjacencyGraph out = prepare_graph(g, pts, 1);
  for (std::size_t d : out.degrees()) EXPECT_GE(d, 1u);
  const auto s = edge_set(out);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const NodeId j = brute_knn(pts, i, 1)[0];
    EXPECT_TRUE(s.count({std::min<NodeId>(static_cast<NodeId>(i), j), std::max<NodeId>(static_cast<NodeId>(i), j)}));
  }
  EXPECT_EQ(s, testing_util::brute_knn_edges(pts, 1));
}

TEST(PrepareGraph, NeverLeavesIsolatedNodes) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const std::size_t n = 2 + seed * 3;
    const auto pts = random_points(n, seed);
    AdjacencyGraph g = testing_util::random_graph(n, 0.05, seed, false);
    const AdjacencyGraph out = prepare_graph(g, pts, 3);
    for (std::size_t d : out.degrees()) EXPECT_GE(d, 1u);
    out.validate();
  }
}

TEST(ConsolidateEdges, SumsDuplicateWeights) {
  const AdjacencyGraph g =
      consolidate_edges(4, {{3, 1, 0.25}, {1, 3, 0.5}, {2, 2, 9.0}, {0, 1, 1.0}, {1, 3, 2.0}});
  EXPECT_EQ(g.edges, (std::vector<Edge>{{0, 1, 1.0}, {1, 3, 2.75}}));
}

TEST(AdjacencyGraph, ValidateRejectsBrokenGraphs) {
  AdjacencyGraph g;
  g.n_nodes = 3;
  g.edges = {{0, 3, 1.0}};
  EXPECT_THROW(g.validate(), InvalidInputError);
  g.edges = {{1, 1, 1.0}};
  EXPECT_THROW(g.validate(), InvalidInputError);
  g.edges = {{0, 1, 0.0}};
  EXPECT_THROW(g.validate(), InvalidInputError);
  g.edges = {{0, 1, 1.0}, {0, 1, 1.0}};
  EXPECT_THROW(g.validate(), InvalidInputError);
  g.edges = {{1, 0, 1.0}};
  EXPECT_FALSE(g.is_canonical());
}

TEST(SplitEdges, ByLabelEquality) {
  AdjacencyGraph g;
  g.n_nodes = 3;
  g.edges = {{0, 1, 1.0}, {1, 2, 1.0}};
  const std::vector<std::uint32_t> labels{0, 0, 1};
  const EdgeSplit s = split_edges_by_label(g, labels);
  EXPECT_EQ(s.intra, (std::vector<Edge>{{0, 1, 1.0}}));
  EXPECT_EQ(s.inter, (std::vector<Edge>{{1, 2, 1.0}}));

  const std::vector<std::uint32_t> same{4, 4, 4};
  EXPECT_TRUE(split_edges_by_label(g, same).inter.empty());
  EXPECT_THROW(split_edges_by_label(g, std::vector<std::uint32_t>{0, 1}), InvalidInputError);
}

TEST(SplitEdges, CountsMatchLinearScan) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    const AdjacencyGraph g = testing_util::random_graph(80, 0.1, 100 + trial);
    std::vector<std::uint32_t> labels(80);
    for (auto& l : labels) l = static_cast<std::uint32_t>(rng() % 4);
    std::size_t intra = 0;
    for (const Edge& e : g.edges) intra += labels[e.u] == labels[e.v];
    const EdgeSplit s = split_edges_by_label(g, labels);
    EXPECT_EQ(s.intra.size(), intra);
    EXPECT_EQ(s.inter.size(), g.edges.size() - intra);
  }
}

TEST(GraphCsv, Dump) {
  testing_util::TempDir dir("graph");
  AdjacencyGraph g;
  g.n_nodes = 3;
  g.edges = {{0, 1, 1.0}, {1, 2, 2.5}};
  write_graph_csv(dir / "g.csv", g);
  EXPECT_EQ(testing_util::read_file(dir / "g.csv"), "u,v,w\n0,1,1\n1,2,2.5\n");
}
