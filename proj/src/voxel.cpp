#include "superpart/voxel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace superpart {

void VoxelGridSpec::validate() const {
  if (!(cell_size > 0.0) || !std::isfinite(cell_size)) {
    throw InvalidInputError("voxel cell size must be positive and finite");
  }
}

namespace {

constexpr int kAxisBits = 21;
constexpr std::int64_t kAxisCells = std::int64_t{1} << kAxisBits;

// Voxel groups ordered by first appearance. `members` lists point indices of
// each voxel contiguously, in input order.
struct VoxelGroups {
  std::vector<NodeId> voxel_of_point;
  std::vector<std::size_t> offsets;  // size n_voxels + 1
  std::vector<NodeId> members;
};

VoxelGroups group_by_voxel(const PointCloud& cloud, const VoxelGridSpec& spec) {
  spec.validate();
  cloud.validate();
  const std::size_t n = cloud.size();

  // The grid is aligned to integer multiples of the cell size; the origin is
  // the grid corner of the cell holding the cloud's minimum corner.
  Eigen::Array3d lo = cloud.positions[0].array();
  for (const Vec3& p : cloud.positions) lo = lo.min(p.array());
  const Eigen::Array3d base = (lo / spec.cell_size).floor();

  std::vector<std::uint64_t> keys(n);
  bool overflow = false;
#pragma omp parallel for schedule(static) reduction(|| : overflow)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
    const Eigen::Array3d cell =
        (cloud.positions[static_cast<std::size_t>(i)].array() / spec.cell_size).floor() - base;
    std::uint64_t key = 0;
    for (int d = 0; d < 3; ++d) {
      const auto c = static_cast<std::int64_t>(cell[d]);
      if (c < 0 || c >= kAxisCells) overflow = true;
      key = (key << kAxisBits) | static_cast<std::uint64_t>(std::clamp<std::int64_t>(c, 0, kAxisCells - 1));
    }
    keys[static_cast<std::size_t>(i)] = key;
  }
  if (overflow) throw InvalidInputError("cloud extent exceeds voxel grid capacity for this cell size");

  std::vector<NodeId> order(n);
  std::iota(order.begin(), order.end(), NodeId{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](NodeId a, NodeId b) { return keys[a] < keys[b]; });

  // Runs of equal keys; the first member of a run is its smallest point index.
  std::vector<std::size_t> run_start;
  for (std::size_t i = 0; i < n; ++i) {
    if (i == 0 || keys[order[i]] != keys[order[i - 1]]) run_start.push_back(i);
  }
  run_start.push_back(n);
  const std::size_t n_voxels = run_start.size() - 1;
  std::vector<std::size_t> run_order(n_voxels);
  std::iota(run_order.begin(), run_order.end(), std::size_t{0});
  std::sort(run_order.begin(), run_order.end(), [&](std::size_t a, std::size_t b) {
    return order[run_start[a]] < order[run_start[b]];
  });

  VoxelGroups g;
  g.voxel_of_point.resize(n);
  g.offsets.reserve(n_voxels + 1);
  g.members.reserve(n);
  g.offsets.push_back(0);
  for (std::size_t v = 0; v < n_voxels; ++v) {
    const std::size_t r = run_order[v];
    for (std::size_t i = run_start[r]; i < run_start[r + 1]; ++i) {
      g.members.push_back(order[i]);
      g.voxel_of_point[order[i]] = static_cast<NodeId>(v);
    }
    g.offsets.push_back(g.members.size());
  }
  return g;
}

}  // namespace

VoxelSubsample voxel_subsample(const PointCloud& cloud, const VoxelGridSpec& spec) {
  const VoxelGroups g = group_by_voxel(cloud, spec);
  const std::size_t n_voxels = g.offsets.size() - 1;

  VoxelSubsample out;
  out.index_map = g.voxel_of_point;
  PointCloud& sub = out.cloud;
  sub.positions.resize(n_voxels);
  if (cloud.colors) sub.colors.emplace(n_voxels);
  if (cloud.intensity) sub.intensity.emplace(n_voxels);
  if (cloud.labels) {
    sub.labels.emplace(n_voxels);
    sub.num_classes = cloud.num_classes;
  }

#pragma omp parallel
  {
    std::vector<std::uint32_t> counts(cloud.labels ? cloud.num_classes : 0);
#pragma omp for schedule(static)
    for (std::ptrdiff_t vi = 0; vi < static_cast<std::ptrdiff_t>(n_voxels); ++vi) {
      const auto v = static_cast<std::size_t>(vi);
      const std::span<const NodeId> idx(g.members.data() + g.offsets[v],
                                        g.offsets[v + 1] - g.offsets[v]);
      const double inv = 1.0 / static_cast<double>(idx.size());

      Vec3 pos = Vec3::Zero();
      for (NodeId i : idx) pos += cloud.positions[i];
      sub.positions[v] = idx.size() == 1 ? cloud.positions[idx[0]] : Vec3(pos * inv);

      if (cloud.colors) {
        Eigen::Array3d c = Eigen::Array3d::Zero();
        for (NodeId i : idx) {
          const Color& ci = (*cloud.colors)[i];
          c += Eigen::Array3d(ci[0], ci[1], ci[2]);
        }
        c *= inv;
        (*sub.colors)[v] = idx.size() == 1 ? (*cloud.colors)[idx[0]]
                                           : Color{static_cast<float>(c[0]), static_cast<float>(c[1]),
                                                   static_cast<float>(c[2])};
      }
      if (cloud.intensity) {
        double s = 0.0;
        for (NodeId i : idx) s += (*cloud.intensity)[i];
        (*sub.intensity)[v] = idx.size() == 1 ? (*cloud.intensity)[idx[0]] : static_cast<float>(s * inv);
      }
      if (cloud.labels) {
        std::fill(counts.begin(), counts.end(), 0u);
        for (NodeId i : idx) ++counts[(*cloud.labels)[i]];
        // max_element returns the first maximum, i.e. the smallest class id.
        (*sub.labels)[v] =
            static_cast<std::uint32_t>(std::max_element(counts.begin(), counts.end()) - counts.begin());
      }
    }
  }
  return out;
}

VoxelPartition voxel_partition_baseline(const PointCloud& cloud, const VoxelGridSpec& spec) {
  VoxelGroups g = group_by_voxel(cloud, spec);
  VoxelPartition p;
  p.n_components = g.offsets.size() - 1;
  p.assignment = std::move(g.voxel_of_point);
  return p;
}

}  // namespace superpart
