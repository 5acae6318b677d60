#include "pipeline.hpp"

#include "superpart/features.hpp"
#include "superpart/synth.hpp"
#include "superpart/voxel.hpp"

#include <chrono>
#include <numeric>

namespace superpart::cli {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

}  // namespace

PipelineResult prepare_nodes(const PointCloud& cloud, const RunConfig& cfg) {
  cfg.validate();
  cloud.validate();
  PipelineResult r;
  auto t = Clock::now();
  if (cfg.voxel_size > 0.0) {
    VoxelSubsample sub = voxel_subsample(cloud, VoxelGridSpec{cfg.voxel_size});
    r.nodes = std::move(sub.cloud);
    r.index_map = std::move(sub.index_map);
  } else {
    r.nodes = cloud;
    r.index_map.resize(cloud.size());
    std::iota(r.index_map.begin(), r.index_map.end(), NodeId{0});
  }
  r.timings.push_back({"voxelize", seconds_since(t)});

  t = Clock::now();
  r.graph = build_knn_graph(r.nodes, cfg.graph);
  r.timings.push_back({"knn", seconds_since(t)});

  t = Clock::now();
  r.point_features = geometric_features(r.nodes, cfg.features);
  r.timings.push_back({"point features", seconds_since(t)});
  return r;
}

PipelineResult run_pipeline(const PointCloud& cloud, const RunConfig& cfg,
                            const std::optional<EmbeddingMatrix>& embeddings) {
  const auto start = Clock::now();
  PipelineResult r = prepare_nodes(cloud, cfg);
  auto t = Clock::now();
  if (embeddings) {
    if (embeddings->rows() != r.nodes.size()) {
      throw InvalidInputError("embeddings have " + std::to_string(embeddings->rows()) + " rows but the cloud has " +
                              std::to_string(r.nodes.size()) + " points after subsampling");
    }
    embeddings->validate(r.nodes.size());
    r.embeddings = *embeddings;
  } else {
    r.embeddings = r.point_features;
  }
  r.timings.back().seconds += seconds_since(t);

  t = Clock::now();
  const std::vector<PartitionConfig> levels = cfg.level_configs();
  r.hierarchy = hierarchical_partition(r.embeddings, r.graph, r.nodes.positions, levels);
  r.timings.push_back({"partition", seconds_since(t)});

  t = Clock::now();
  for (const Partition& level : r.hierarchy.levels) {
    r.superpoint_features.push_back(superpoint_stats(r.point_features, level.assignment, r.nodes.positions));
    std::vector<NodeId> per_point(cloud.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(cloud.size()); ++i) {
      per_point[static_cast<std::size_t>(i)] = level.assignment[r.index_map[static_cast<std::size_t>(i)]];
    }
    r.point_levels.push_back(std::move(per_point));
  }
  r.timings.push_back({"superpoint features", seconds_since(t)});

  r.end_to_end_seconds = seconds_since(start);
  return r;
}

PointCloud bench_cloud(std::size_t n_points, std::uint64_t seed) {
  SceneSpec spec = parse_scene_spec(parse_key_value(default_scene_spec_text()));
  spec.scale_density(static_cast<double>(n_points) / spec.expected_points());
  return synth_scene(seed, spec);
}

}  // namespace superpart::cli
