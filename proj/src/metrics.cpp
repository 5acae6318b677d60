#include "superpart/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

namespace superpart {

OracleReport oracle_miou(std::span<const NodeId> assignment, std::span<const std::uint32_t> labels,
                         std::uint32_t num_classes) {
  const std::size_t n = assignment.size();
  if (num_classes < 1) throw InvalidInputError("oracle mIoU needs at least one class");
  if (labels.size() != n) throw InvalidInputError("labels must cover every point");
  if (n == 0) throw InvalidInputError("oracle mIoU of an empty point set");

  NodeId max_id = 0;
  for (NodeId a : assignment) max_id = std::max(max_id, a);
  if (max_id >= n) throw InvalidInputError("superpoint ids must be smaller than the number of points");
  for (std::uint32_t l : labels) {
    if (l >= num_classes) throw InvalidInputError("label " + std::to_string(l) + " is out of range");
  }

  // Group points by superpoint (counting sort), then take a histogram per group.
  const std::size_t n_ids = static_cast<std::size_t>(max_id) + 1;
  std::vector<std::size_t> offsets(n_ids + 1, 0);
  for (NodeId a : assignment) ++offsets[a + 1];
  for (std::size_t s = 0; s < n_ids; ++s) offsets[s + 1] += offsets[s];
  std::vector<std::uint32_t> grouped(n);
  {
    std::vector<std::size_t> fill(offsets.begin(), offsets.end() - 1);
    for (std::size_t i = 0; i < n; ++i) grouped[fill[assignment[i]]++] = labels[i];
  }

  OracleReport r;
  r.majority_labels.assign(n_ids, kNoClass);
  r.true_positives.assign(num_classes, 0);
  r.false_positives.assign(num_classes, 0);
  r.false_negatives.assign(num_classes, 0);
  std::vector<std::uint64_t> hist(num_classes, 0);
  for (std::size_t s = 0; s < n_ids; ++s) {
    if (offsets[s] == offsets[s + 1]) continue;
    ++r.n_superpoints;
    for (std::size_t i = offsets[s]; i < offsets[s + 1]; ++i) ++hist[grouped[i]];
    std::uint32_t best = grouped[offsets[s]];
    for (std::size_t i = offsets[s]; i < offsets[s + 1]; ++i) {
      const std::uint32_t c = grouped[i];
      if (hist[c] > hist[best] || (hist[c] == hist[best] && c < best)) best = c;
    }
    r.majority_labels[s] = best;
    const std::uint64_t size = offsets[s + 1] - offsets[s];
    r.true_positives[best] += hist[best];
    r.false_positives[best] += size - hist[best];
    for (std::size_t i = offsets[s]; i < offsets[s + 1]; ++i) {
      const std::uint32_t c = grouped[i];
      if (hist[c] != 0 && c != best) r.false_negatives[c] += hist[c];
      hist[c] = 0;
    }
  }

  r.per_class_iou.assign(num_classes, std::nan(""));
  std::vector<double> present;
  for (std::uint32_t c = 0; c < num_classes; ++c) {
    const std::uint64_t denom = r.true_positives[c] + r.false_positives[c] + r.false_negatives[c];
    if (denom == 0) continue;
    r.per_class_iou[c] = 100.0 * static_cast<double>(r.true_positives[c]) / static_cast<double>(denom);
    present.push_back(r.per_class_iou[c]);
  }
  if (present.empty()) throw InvalidInputError("no class is present in prediction or ground truth");
  r.oracle_miou = pairwise_sum(present) / static_cast<double>(present.size());
  return r;
}

std::vector<PurityRow> purity_curve(const PointCloud& cloud, const EmbeddingMatrix& F,
                                    const AdjacencyGraph& graph, SweepParameter parameter,
                                    std::span<const double> grid, const PartitionConfig& base) {
  if (!cloud.has_labels()) throw InvalidInputError("purity curve needs a labeled cloud");
  if (grid.empty()) throw InvalidInputError("purity curve needs at least one grid value");
  std::vector<PurityRow> rows;
  for (double value : grid) {
    PartitionConfig cfg = base;
    if (parameter == SweepParameter::kLambda) {
      cfg.lambda = value;
    } else {
      if (!(value >= 1.0) || value != std::floor(value)) {
        throw InvalidInputError("minimum superpoint size must be an integer >= 1");
      }
      cfg.min_size = static_cast<std::uint64_t>(value);
    }
    const Partition p = greedy_partition(F, graph, cloud.positions, cfg);
    const OracleReport rep = oracle_miou(p.assignment, *cloud.labels, cloud.num_classes);
    rows.push_back({value, rep.n_superpoints, rep.oracle_miou, rep.per_class_iou});
  }
  std::stable_sort(rows.begin(), rows.end(), [](const PurityRow& a, const PurityRow& b) {
    if (a.n_superpoints != b.n_superpoints) return a.n_superpoints < b.n_superpoints;
    return a.parameter < b.parameter;
  });
  return rows;
}

namespace {

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

std::string iou_cells(std::span<const double> iou) {
  std::string out;
  for (double v : iou) out += "," + (std::isnan(v) ? std::string("nan") : fmt("%.6f", v));
  return out;
}

}  // namespace

std::string purity_csv(std::span<const PurityRow> rows, std::uint32_t num_classes) {
  std::string out = "n_superpoints,oracle_miou";
  for (std::uint32_t c = 0; c < num_classes; ++c) out += ",iou_" + std::to_string(c);
  out += ",parameter\n";
  for (const PurityRow& r : rows) {
    out += std::to_string(r.n_superpoints) + "," + fmt("%.6f", r.oracle_miou) + iou_cells(r.per_class_iou) +
           "," + fmt("%.17g", r.parameter) + "\n";
  }
  return out;
}

std::string oracle_csv(std::span<const OracleReport> levels) {
  const std::size_t n_classes = levels.empty() ? 0 : levels.front().per_class_iou.size();
  std::string out = "level,n_superpoints,oracle_miou";
  for (std::size_t c = 0; c < n_classes; ++c) out += ",iou_" + std::to_string(c);
  out += "\n";
  for (std::size_t l = 0; l < levels.size(); ++l) {
    out += std::to_string(l) + "," + std::to_string(levels[l].n_superpoints) + "," +
           fmt("%.6f", levels[l].oracle_miou) + iou_cells(levels[l].per_class_iou) + "\n";
  }
  return out;
}

std::string oracle_table(std::span<const OracleReport> levels) {
  std::string out;
  char buf[128];
  std::snprintf(buf, sizeof(buf), "%-6s %14s %12s\n", "level", "superpoints", "oracle mIoU");
  out += buf;
  for (std::size_t l = 0; l < levels.size(); ++l) {
    std::snprintf(buf, sizeof(buf), "%-6zu %14zu %12.2f\n", l, levels[l].n_superpoints, levels[l].oracle_miou);
    out += buf;
  }
  return out;
}

std::string format_rate(std::size_t n_points, double seconds) {
  if (!(seconds >= kMinTimerResolution)) return "<min resolution";
  return fmt("%.6g", static_cast<double>(n_points) / seconds);
}

ThroughputReport throughput_report(std::vector<StageTiming> stages, std::size_t n_points,
                                   double end_to_end_seconds) {
  ThroughputReport r;
  r.n_points = n_points;
  r.stages = std::move(stages);
  r.end_to_end_seconds = end_to_end_seconds;
  for (const StageTiming& s : r.stages) r.stage_sum_seconds += s.seconds;
  if (end_to_end_seconds >= kMinTimerResolution) {
    r.inconsistent = std::abs(r.stage_sum_seconds - end_to_end_seconds) > 0.1 * end_to_end_seconds;
  } else {
    r.inconsistent = r.stage_sum_seconds >= kMinTimerResolution;
  }
  return r;
}

std::string ThroughputReport::csv() const {
  std::string out = "stage,seconds,points_per_second,share\n";
  auto row = [&](const std::string& name, double sec) {
    const std::string share =
        end_to_end_seconds >= kMinTimerResolution ? fmt("%.4f", sec / end_to_end_seconds) : "nan";
    out += name + "," + fmt("%.9f", sec) + "," + format_rate(n_points, sec) + "," + share + "\n";
  };
  for (const StageTiming& s : stages) row(s.name, s.seconds);
  row("end_to_end", end_to_end_seconds);
  return out;
}

std::string ThroughputReport::table() const {
  std::string out;
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%-22s %12s %18s %8s\n", "stage", "seconds", "points/s", "share");
  out += buf;
  auto row = [&](const std::string& name, double sec) {
    const std::string share =
        end_to_end_seconds >= kMinTimerResolution ? fmt("%.1f%%", 100.0 * sec / end_to_end_seconds) : "-";
    std::snprintf(buf, sizeof(buf), "%-22s %12.4f %18s %8s\n", name.c_str(), sec,
                  format_rate(n_points, sec).c_str(), share.c_str());
    out += buf;
  };
  for (const StageTiming& s : stages) row(s.name, s.seconds);
  row("end-to-end", end_to_end_seconds);
  std::snprintf(buf, sizeof(buf), "%zu points\n", n_points);
  out += buf;
  if (inconsistent) {
    out += "warning: stage timings sum to " + fmt("%.4f", stage_sum_seconds) + " s, more than 10% away from " +
           fmt("%.4f", end_to_end_seconds) + " s end-to-end\n";
  }
  return out;
}

}  // namespace superpart
