#include "superpart/partition_io.hpp"

#include <charconv>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

namespace superpart {

namespace {

constexpr char kMagic[8] = {'S', 'U', 'P', 'P', 'A', 'R', 'T', '1'};

void validate_levels(const LevelAssignments& levels) {
  if (levels.empty()) throw InvalidInputError("partition hierarchy is empty");
  if (levels.size() > std::numeric_limits<std::uint8_t>::max()) {
    throw InvalidInputError("too many hierarchy levels for the partition format");
  }
  const std::size_t n = levels.front().size();
  if (n > std::numeric_limits<std::uint32_t>::max()) {
    throw InvalidInputError("too many points for the partition format");
  }
  for (const auto& level : levels) {
    if (level.size() != n) throw InvalidInputError("hierarchy levels cover different point counts");
  }
}

}  // namespace

void write_partition(const std::filesystem::path& path, const HierarchicalPartition& hierarchy,
                     PartitionFormat format) {
  LevelAssignments levels;
  for (const Partition& p : hierarchy.levels) levels.push_back(p.assignment);
  write_partition(path, levels, format);
}

void write_partition(const std::filesystem::path& path, const LevelAssignments& levels,
                     PartitionFormat format) {
  validate_levels(levels);
  const std::size_t n = levels.front().size();
  const std::size_t n_levels = levels.size();
  std::string out;
  if (format == PartitionFormat::kCsv) {
    out += "point_id";
    for (std::size_t l = 0; l < n_levels; ++l) out += ",level" + std::to_string(l);
    out += '\n';
    char buf[16];
    for (std::size_t i = 0; i < n; ++i) {
      out.append(buf, std::to_chars(buf, buf + sizeof(buf), i).ptr);
      for (std::size_t l = 0; l < n_levels; ++l) {
        out += ',';
        out.append(buf, std::to_chars(buf, buf + sizeof(buf), levels[l][i]).ptr);
      }
      out += '\n';
    }
  } else {
    out.append(kMagic, sizeof(kMagic));
    const auto n32 = static_cast<std::uint32_t>(n);
    out.append(reinterpret_cast<const char*>(&n32), 4);
    out += static_cast<char>(static_cast<std::uint8_t>(n_levels));
    out.append(3, '\0');
    out.reserve(out.size() + n * n_levels * 4);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t l = 0; l < n_levels; ++l) {
        const std::uint32_t v = levels[l][i];
        out.append(reinterpret_cast<const char*>(&v), 4);
      }
    }
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open '" + path.string() + "' for writing");
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw IoError("write failed for '" + path.string() + "'");
}

LevelAssignments read_partition(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path.string() + "'");
  std::string data((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  const std::string where = "'" + path.string() + "'";

  if (data.size() >= 16 && std::memcmp(data.data(), kMagic, 8) == 0) {
    std::uint32_t n = 0;
    std::memcpy(&n, data.data() + 8, 4);
    const auto n_levels = static_cast<std::uint8_t>(data[12]);
    if (n_levels == 0) throw ParseError(where + ": zero hierarchy levels", 1);
    if (data.size() != 16 + static_cast<std::size_t>(n) * n_levels * 4) {
      throw ParseError(where + ": payload size does not match header", 1);
    }
    LevelAssignments levels(n_levels, std::vector<NodeId>(n));
    const char* p = data.data() + 16;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t l = 0; l < n_levels; ++l, p += 4) std::memcpy(&levels[l][i], p, 4);
    }
    return levels;
  }

  std::istringstream in(data);
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line) || line.rfind("point_id", 0) != 0) {
    throw ParseError(where + ": expected a 'point_id,level0,...' header", line_no);
  }
  const auto n_levels = static_cast<std::size_t>(std::count(line.begin(), line.end(), ','));
  if (n_levels == 0) throw ParseError(where + ": header lists no levels", line_no);
  LevelAssignments levels(n_levels);
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const char* p = line.data();
    const char* end = line.data() + line.size();
    std::uint64_t id = 0;
    auto r = std::from_chars(p, end, id);
    if (r.ec != std::errc() || id != levels[0].size()) {
      throw ParseError(where + ": expected point id " + std::to_string(levels[0].size()), line_no);
    }
    p = r.ptr;
    for (std::size_t l = 0; l < n_levels; ++l) {
      if (p == end || *p != ',') throw ParseError(where + ": too few columns", line_no);
      NodeId v = 0;
      r = std::from_chars(p + 1, end, v);
      if (r.ec != std::errc()) throw ParseError(where + ": bad component id", line_no);
      levels[l].push_back(v);
      p = r.ptr;
    }
    if (p != end) throw ParseError(where + ": too many columns", line_no);
  }
  return levels;
}

}  // namespace superpart
