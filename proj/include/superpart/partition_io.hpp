#pragma once

#include "superpart/partition.hpp"

#include <filesystem>
#include <vector>

namespace superpart {

enum class PartitionFormat { kCsv, kBinary };

// One vector per level, each with one component id per point.
using LevelAssignments = std::vector<std::vector<NodeId>>;

// CSV: header `point_id,level0,level1,...` then one row per point.
// Binary: "SUPPART1", u32 N, u8 L, 3 zero bytes (16-byte header), then N rows
// of L little-endian u32.
void write_partition(const std::filesystem::path& path, const HierarchicalPartition& hierarchy,
                     PartitionFormat format);
void write_partition(const std::filesystem::path& path, const LevelAssignments& levels,
                     PartitionFormat format);

// Detects the format from the leading magic bytes.
LevelAssignments read_partition(const std::filesystem::path& path);

}  // namespace superpart
