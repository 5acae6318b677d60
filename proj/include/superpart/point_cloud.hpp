#pragma once

#include "superpart/common.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

namespace superpart {

using Color = std::array<float, 3>;

struct PointCloud {
  std::vector<Vec3> positions;
  std::optional<std::vector<Color>> colors;     // in [0,1]
  std::optional<std::vector<float>> intensity;  // in [0,1]
  std::optional<std::vector<std::uint32_t>> labels;
  std::uint32_t num_classes = 0;

  std::size_t size() const { return positions.size(); }
  bool has_labels() const { return labels.has_value(); }

  // Throws InvalidInputError when channel lengths disagree, coordinates are
  // not finite, or a label is >= num_classes.
  void validate() const;
};

enum class PlyEncoding { kAscii, kBinaryLittleEndian };

PointCloud read_ply(const std::filesystem::path& path);
void write_ply(const std::filesystem::path& path, const PointCloud& cloud,
               PlyEncoding encoding = PlyEncoding::kBinaryLittleEndian);

}  // namespace superpart
