#pragma once

#include "superpart/point_cloud.hpp"

#include <cstdint>
#include <vector>

namespace superpart {

// Regular grid anchored at the axis-aligned minimum corner of the cloud.
struct VoxelGridSpec {
  double cell_size = 0.03;

  void validate() const;
};

struct VoxelSubsample {
  PointCloud cloud;
  // original point -> index of its voxel's representative in `cloud`
  std::vector<NodeId> index_map;
};

// One point per occupied voxel: centroid position, mean color/intensity,
// majority label (ties to the smallest class id). Output voxels are ordered by
// first appearance in the input.
VoxelSubsample voxel_subsample(const PointCloud& cloud, const VoxelGridSpec& spec);

// Each point gets the id of its voxel, ids consecutive from 0 in order of first
// appearance.
struct VoxelPartition {
  std::vector<NodeId> assignment;
  std::size_t n_components = 0;
};
VoxelPartition voxel_partition_baseline(const PointCloud& cloud, const VoxelGridSpec& spec);

}  // namespace superpart
