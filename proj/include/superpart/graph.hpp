#pragma once

#include "superpart/point_cloud.hpp"

#include <filesystem>
#include <span>
#include <vector>

namespace superpart {

struct Edge {
  NodeId u;
  NodeId v;
  double weight = 1.0;

  friend bool operator==(const Edge&, const Edge&) = default;
};

// Undirected weighted graph stored as an edge list. Canonical form keeps u < v
// and edges sorted by (u, v) without duplicates.
struct AdjacencyGraph {
  std::size_t n_nodes = 0;
  std::vector<Edge> edges;

  // Throws InvalidInputError unless the graph is simple, canonical and has
  // positive finite weights.
  void validate() const;
  bool is_canonical() const;
  std::vector<std::size_t> degrees() const;
};

struct GraphConfig {
  std::size_t k = 8;
};

// Symmetrized k-NN graph over point positions with unit weights. Distance ties
// go to the smaller point index.
AdjacencyGraph build_knn_graph(std::span<const Vec3> positions, const GraphConfig& cfg);
AdjacencyGraph build_knn_graph(const PointCloud& cloud, const GraphConfig& cfg);

// Drops self-loops, merges duplicate undirected edges by summing their weights
// and links every isolated node to its k nearest centroids with weight 1.
AdjacencyGraph prepare_graph(const AdjacencyGraph& graph, std::span<const Vec3> positions,
                             std::size_t k);

// Canonicalizes an arbitrary edge multiset: u < v, sorted, duplicates summed,
// self-loops removed. No reconnection.
AdjacencyGraph consolidate_edges(std::size_t n_nodes, std::vector<Edge> edges);

struct EdgeSplit {
  std::vector<Edge> intra;
  std::vector<Edge> inter;
};
EdgeSplit split_edges_by_label(const AdjacencyGraph& graph, std::span<const std::uint32_t> labels);

// Debug dump, one `u,v,w` row per edge.
void write_graph_csv(const std::filesystem::path& path, const AdjacencyGraph& graph);

}  // namespace superpart
