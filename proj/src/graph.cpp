#include "superpart/graph.hpp"

#include "superpart/kdtree.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace superpart {

namespace {

std::uint64_t edge_key(NodeId u, NodeId v) {
  return (static_cast<std::uint64_t>(u) << 32) | v;
}

}  // namespace

void AdjacencyGraph::validate() const {
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const Edge& e = edges[i];
    if (e.u >= n_nodes || e.v >= n_nodes) throw InvalidInputError("edge endpoint out of range");
    if (e.u == e.v) throw InvalidInputError("graph has a self-loop");
    if (!(e.weight > 0.0) || !std::isfinite(e.weight)) {
      throw InvalidInputError("edge weights must be positive and finite");
    }
  }
  if (!is_canonical()) throw InvalidInputError("graph edges are not canonical (u<v, sorted, unique)");
}

bool AdjacencyGraph::is_canonical() const {
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const Edge& e = edges[i];
    if (e.u >= e.v || e.v >= n_nodes) return false;
    if (i > 0 && edge_key(edges[i - 1].u, edges[i - 1].v) >= edge_key(e.u, e.v)) return false;
  }
  return true;
}

std::vector<std::size_t> AdjacencyGraph::degrees() const {
  std::vector<std::size_t> deg(n_nodes, 0);
  for (const Edge& e : edges) {
    if (e.u == e.v) continue;
    ++deg[e.u];
    ++deg[e.v];
  }
  return deg;
}

AdjacencyGraph build_knn_graph(std::span<const Vec3> positions, const GraphConfig& cfg) {
  const std::size_t n = positions.size();
  const std::size_t k = cfg.k;
  if (k < 1) throw InvalidInputError("k must be at least 1");
  if (n <= k) {
    throw InvalidInputError("k-NN graph needs more points (" + std::to_string(n) +
                            ") than neighbors (k=" + std::to_string(k) + ")");
  }
  const std::vector<NodeId> nn = knn_all(positions, k);
  auto in_list = [&](NodeId p, NodeId q) {
    const NodeId* row = nn.data() + static_cast<std::size_t>(p) * k;
    return std::find(row, row + k, q) != row + k;
  };

  // Each undirected pair is emitted once: by the smaller endpoint if it lists
  // the larger one, otherwise by the larger endpoint.
  std::vector<std::uint32_t> counts(n + 1, 0);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t pi = 0; pi < static_cast<std::ptrdiff_t>(n); ++pi) {
    const auto p = static_cast<NodeId>(pi);
    std::uint32_t c = 0;
    for (std::size_t j = 0; j < k; ++j) {
      const NodeId q = nn[p * k + j];
      if (p < q || !in_list(q, p)) ++c;
    }
    counts[p + 1] = c;
  }
  for (std::size_t i = 0; i < n; ++i) counts[i + 1] += counts[i];

  std::vector<std::uint64_t> keys(counts[n]);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t pi = 0; pi < static_cast<std::ptrdiff_t>(n); ++pi) {
    const auto p = static_cast<NodeId>(pi);
    std::size_t out = counts[p];
    for (std::size_t j = 0; j < k; ++j) {
      const NodeId q = nn[p * k + j];
      if (p < q) {
        keys[out++] = edge_key(p, q);
      } else if (!in_list(q, p)) {
        keys[out++] = edge_key(q, p);
      }
    }
  }
  std::sort(keys.begin(), keys.end());

  AdjacencyGraph g;
  g.n_nodes = n;
  g.edges.resize(keys.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(keys.size()); ++i) {
    const std::uint64_t key = keys[static_cast<std::size_t>(i)];
    g.edges[static_cast<std::size_t>(i)] = {static_cast<NodeId>(key >> 32),
                                            static_cast<NodeId>(key & 0xffffffffu), 1.0};
  }
  return g;
}

AdjacencyGraph build_knn_graph(const PointCloud& cloud, const GraphConfig& cfg) {
  return build_knn_graph(std::span<const Vec3>(cloud.positions), cfg);
}

AdjacencyGraph consolidate_edges(std::size_t n_nodes, std::vector<Edge> edges) {
  std::erase_if(edges, [](const Edge& e) { return e.u == e.v; });
  for (Edge& e : edges) {
    if (e.u > e.v) std::swap(e.u, e.v);
    if (e.v >= n_nodes) throw InvalidInputError("edge endpoint out of range");
  }
  std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) {
    return edge_key(a.u, a.v) < edge_key(b.u, b.v);
  });
  AdjacencyGraph g;
  g.n_nodes = n_nodes;
  g.edges.reserve(edges.size());
  for (const Edge& e : edges) {
    if (!g.edges.empty() && g.edges.back().u == e.u && g.edges.back().v == e.v) {
      g.edges.back().weight += e.weight;
    } else {
      g.edges.push_back(e);
    }
  }
  return g;
}

AdjacencyGraph prepare_graph(const AdjacencyGraph& graph, std::span<const Vec3> positions,
                             std::size_t k) {
  if (positions.size() != graph.n_nodes) {
    throw InvalidInputError("prepare_graph needs one position per node");
  }
  AdjacencyGraph g = graph.is_canonical() ? graph : consolidate_edges(graph.n_nodes, graph.edges);
  if (g.n_nodes < 2 || k == 0) return g;

  const std::vector<std::size_t> deg = g.degrees();
  std::vector<NodeId> isolated;
  for (std::size_t i = 0; i < g.n_nodes; ++i) {
    if (deg[i] == 0) isolated.push_back(static_cast<NodeId>(i));
  }
  if (isolated.empty()) return g;

  // k+1 candidates so the node itself can be skipped.
  const std::size_t kk = std::min(k, g.n_nodes - 1);
  std::vector<Vec3> queries;
  queries.reserve(isolated.size());
  for (NodeId i : isolated) queries.push_back(positions[i]);
  const std::vector<NodeId> nn = knn_query(positions, queries, kk + 1);
  const std::size_t stride = std::min(kk + 1, g.n_nodes);

  std::vector<Edge> added;
  added.reserve(isolated.size() * kk);
  for (std::size_t i = 0; i < isolated.size(); ++i) {
    std::size_t taken = 0;
    for (std::size_t j = 0; j < stride && taken < kk; ++j) {
      const NodeId q = nn[i * stride + j];
      if (q == isolated[i]) continue;
      added.push_back({std::min(isolated[i], q), std::max(isolated[i], q), 1.0});
      ++taken;
    }
  }
  // Two isolated nodes may pick each other; that link is created once.
  std::sort(added.begin(), added.end(), [](const Edge& a, const Edge& b) {
    return edge_key(a.u, a.v) < edge_key(b.u, b.v);
  });
  added.erase(std::unique(added.begin(), added.end(),
                          [](const Edge& a, const Edge& b) { return a.u == b.u && a.v == b.v; }),
              added.end());

  std::vector<Edge> merged;
  merged.reserve(g.edges.size() + added.size());
  std::merge(g.edges.begin(), g.edges.end(), added.begin(), added.end(), std::back_inserter(merged),
             [](const Edge& a, const Edge& b) { return edge_key(a.u, a.v) < edge_key(b.u, b.v); });
  g.edges = std::move(merged);
  return g;
}

EdgeSplit split_edges_by_label(const AdjacencyGraph& graph, std::span<const std::uint32_t> labels) {
  if (labels.size() != graph.n_nodes) {
    throw InvalidInputError("labels must cover every graph node");
  }
  EdgeSplit split;
  for (const Edge& e : graph.edges) {
    (labels[e.u] == labels[e.v] ? split.intra : split.inter).push_back(e);
  }
  return split;
}

void write_graph_csv(const std::filesystem::path& path, const AdjacencyGraph& graph) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open '" + path.string() + "' for writing");
  f << "u,v,w\n";
  f.precision(17);
  for (const Edge& e : graph.edges) f << e.u << ',' << e.v << ',' << e.weight << '\n';
  if (!f) throw IoError("write failed for '" + path.string() + "'");
}

}  // namespace superpart
