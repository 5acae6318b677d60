#pragma once

#include "superpart/embedding.hpp"
#include "superpart/graph.hpp"
#include "superpart/partition.hpp"
#include "superpart/point_cloud.hpp"

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace superpart {

inline constexpr std::uint32_t kNoClass = std::numeric_limits<std::uint32_t>::max();

struct OracleReport {
  std::size_t n_superpoints = 0;
  double oracle_miou = 0.0;                  // percent
  std::vector<double> per_class_iou;         // percent; NaN for excluded classes
  std::vector<std::uint32_t> majority_labels;  // indexed by superpoint id; kNoClass for unused ids
  std::vector<std::uint64_t> true_positives;
  std::vector<std::uint64_t> false_positives;
  std::vector<std::uint64_t> false_negatives;
};

// Labels every superpoint with its majority ground-truth class (ties to the
// smaller class) and scores the result with per-point IoU. Classes absent
// from both the prediction and the ground truth do not enter the mean.
// Superpoint ids must be smaller than the number of points.
OracleReport oracle_miou(std::span<const NodeId> assignment, std::span<const std::uint32_t> labels,
                         std::uint32_t num_classes);

enum class SweepParameter { kLambda, kMinSize };

struct PurityRow {
  double parameter = 0.0;
  std::size_t n_superpoints = 0;
  double oracle_miou = 0.0;
  std::vector<double> per_class_iou;
};

// One greedy_partition per grid value, with `base` supplying every other
// setting. Rows come back sorted by superpoint count, then by parameter.
std::vector<PurityRow> purity_curve(const PointCloud& cloud, const EmbeddingMatrix& F,
                                    const AdjacencyGraph& graph, SweepParameter parameter,
                                    std::span<const double> grid, const PartitionConfig& base);

// Header `n_superpoints,oracle_miou,iou_0,...`.
std::string purity_csv(std::span<const PurityRow> rows, std::uint32_t num_classes);
std::string oracle_csv(std::span<const OracleReport> levels);
std::string oracle_table(std::span<const OracleReport> levels);

struct StageTiming {
  std::string name;
  double seconds = 0.0;
};

struct ThroughputReport {
  std::size_t n_points = 0;
  std::vector<StageTiming> stages;
  double end_to_end_seconds = 0.0;
  double stage_sum_seconds = 0.0;
  bool inconsistent = false;  // stage sum differs from end-to-end by more than 10%

  std::string csv() const;
  std::string table() const;
};

// Below this a timing is treated as unmeasurable.
inline constexpr double kMinTimerResolution = 1e-9;

ThroughputReport throughput_report(std::vector<StageTiming> stages, std::size_t n_points,
                                   double end_to_end_seconds);

// Points per second as text, or "<min resolution" when the timing is too small.
std::string format_rate(std::size_t n_points, double seconds);

}  // namespace superpart
