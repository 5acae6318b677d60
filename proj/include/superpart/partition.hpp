#pragma once

#include "superpart/embedding.hpp"
#include "superpart/energy.hpp"
#include "superpart/graph.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace superpart {

struct PartitionConfig {
  double lambda = 0.02;
  std::uint64_t min_size = 1;      // sigma_min, in points
  std::size_t knn_reconnect = 8;   // k for linking isolated nodes at level entry
  std::uint64_t seed = 0;          // drives the WCC permutations

  void validate() const;
};

// Partition of the input nodes into graph-connected components.
struct Partition {
  std::vector<NodeId> assignment;  // input node -> component id, consecutive from 0
  std::size_t n_components = 0;
  ComponentStats components;
  AdjacencyGraph component_graph;  // boundary weights summed over input edges
};

// Directed merge P -> Q with its gain.
struct MergeCandidate {
  NodeId source;
  NodeId target;
  double gain;

  friend bool operator==(const MergeCandidate&, const MergeCandidate&) = default;
};

// Candidate merges and conflict removal for one iteration. A directed edge
// P -> Q is a candidate when gain(P,Q) > 0 or |P| < min_size; each source
// keeps only its highest-gain candidate, ties going to the smaller target.
// The result is sorted by source; empty means no merge is left.
std::vector<MergeCandidate> merge_step(const ComponentStats& state, const AdjacencyGraph& component_graph,
                                       const PartitionConfig& cfg);

struct IterationRecord {
  std::size_t components_before = 0;
  std::size_t components_after = 0;
  std::vector<MergeCandidate> merges;
  // Sum of gains over merge groups of exactly two components, and whether
  // every group was such a pair.
  double pairwise_gain_sum = 0.0;
  bool only_pairwise = true;
  std::vector<NodeId> assignment;  // input node -> component after this iteration
};

struct PartitionTrace {
  std::vector<IterationRecord> iterations;
};

// Iteration cap: 10 * log2(N) + 50.
std::size_t iteration_cap(std::size_t n_nodes);

// Greedy parallel merging from singletons. Isolated nodes of the input graph
// are linked to their nearest neighbors once, before the first iteration.
// Each iteration selects merges with merge_step, contracts the weakly
// connected components of the merge graph, then recomputes sizes, means,
// centroids and the weight-summed component graph. Stops when no candidate
// is left or a single component remains.
Partition greedy_partition(const EmbeddingMatrix& F, const AdjacencyGraph& graph,
                           std::span<const Vec3> positions, const PartitionConfig& cfg,
                           PartitionTrace* trace = nullptr);

// Same algorithm starting from already-aggregated nodes (sizes, means,
// centroids), as used for the coarser levels of a hierarchy.
Partition greedy_merge(const ComponentStats& nodes, const AdjacencyGraph& graph, const PartitionConfig& cfg,
                       PartitionTrace* trace = nullptr);

struct HierarchicalPartition {
  std::vector<Partition> levels;          // assignments are per point
  std::vector<std::vector<NodeId>> maps;  // maps[l]: level-l component -> level-(l+1) component
  std::vector<std::string> warnings;

  std::size_t n_points() const { return levels.empty() ? 0 : levels.front().assignment.size(); }
};

// Level 1 partitions the points; level l+1 partitions the superpoints of
// level l using their means, sizes, centroids and component graph.
HierarchicalPartition hierarchical_partition(const EmbeddingMatrix& F, const AdjacencyGraph& graph,
                                             std::span<const Vec3> positions,
                                             std::span<const PartitionConfig> levels);

}  // namespace superpart
