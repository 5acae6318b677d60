#pragma once

#include "superpart/embedding.hpp"
#include "superpart/graph.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace superpart {

struct Superpoint {
  std::uint64_t size = 1;
  std::vector<double> mean_embedding;
  Vec3 centroid = Vec3::Zero();
};

// Structure-of-arrays view of a set of superpoints.
struct ComponentStats {
  std::vector<std::uint64_t> sizes;
  EmbeddingMatrix means;
  std::vector<Vec3> centroids;

  std::size_t size() const { return sizes.size(); }
  Superpoint at(std::size_t i) const;
};

// Exact per-component size, mean embedding and mean position for a point-level
// assignment with ids consecutive from 0.
ComponentStats superpoint_stats(const EmbeddingMatrix& F, std::span<const NodeId> assignment,
                                std::span<const Vec3> positions);

// Stats of a coarser grouping of already-aggregated nodes. Means and centroids
// are recomputed from size-weighted sums, so they equal the point-level means.
ComponentStats aggregate_stats(const ComponentStats& nodes, std::span<const NodeId> assignment,
                               std::size_t n_components);

struct PartitionEnergyBreakdown {
  double fidelity = 0.0;
  double contour = 0.0;
  double total = 0.0;
};

// sum_p ||f_p - F_P||^2 + lambda * sum over cut edges of w
PartitionEnergyBreakdown energy(const EmbeddingMatrix& F, const AdjacencyGraph& graph,
                                std::span<const NodeId> assignment, double lambda);

// Energy decrease from merging adjacent superpoints P and Q:
//   -|P||Q|/(|P|+|Q|) ||F_P - F_Q||^2 + lambda * w_PQ
double merge_gain(const Superpoint& P, const Superpoint& Q, double w_pq, double lambda);
double merge_gain(std::uint64_t size_p, std::span<const double> mean_p, std::uint64_t size_q,
                  std::span<const double> mean_q, double w_pq, double lambda);

struct BruteForceResult {
  std::vector<NodeId> assignment;
  double energy = 0.0;
  std::size_t candidates = 0;  // partitions with graph-connected blocks
};

// Exhaustive minimizer over all partitions whose blocks are connected in the
// graph. Refuses graphs above max_nodes.
BruteForceResult brute_force_best_partition(const EmbeddingMatrix& F, const AdjacencyGraph& graph,
                                            double lambda, std::size_t max_nodes = 10);

}  // namespace superpart
