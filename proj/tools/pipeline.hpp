#pragma once

#include "run_config.hpp"

#include "superpart/energy.hpp"
#include "superpart/metrics.hpp"
#include "superpart/partition_io.hpp"
#include "superpart/point_cloud.hpp"

#include <optional>
#include <vector>

namespace superpart::cli {

struct PipelineResult {
  PointCloud nodes;                  // the cloud after voxel subsampling
  std::vector<NodeId> index_map;     // original point -> node
  AdjacencyGraph graph;
  EmbeddingMatrix point_features;    // handcrafted features of the nodes
  EmbeddingMatrix embeddings;        // what the partition ran on
  HierarchicalPartition hierarchy;   // over nodes
  LevelAssignments point_levels;     // over original points
  std::vector<ComponentStats> superpoint_features;  // per level, over point_features
  std::vector<StageTiming> timings;
  double end_to_end_seconds = 0.0;
};

// The first three stages only: nodes, index_map, graph, point_features and
// their timings.
PipelineResult prepare_nodes(const PointCloud& cloud, const RunConfig& cfg);

// Raw points to hierarchical superpoints: voxelize, k-NN graph, point
// features, partition, superpoint features. `embeddings` replaces the
// handcrafted features as partition input when given; it must have one row
// per node after subsampling.
PipelineResult run_pipeline(const PointCloud& cloud, const RunConfig& cfg,
                            const std::optional<EmbeddingMatrix>& embeddings = std::nullopt);

// The default synthetic room, rescaled so that it holds about n points.
PointCloud bench_cloud(std::size_t n_points, std::uint64_t seed);

}  // namespace superpart::cli
