#include "superpart/embedding.hpp"

#include <cstring>
#include <fstream>
#include <limits>

namespace superpart {

namespace {
constexpr char kMagic[8] = {'S', 'U', 'P', 'E', 'M', 'B', 'D', '1'};
}

void EmbeddingMatrix::validate(std::size_t expected_rows) const {
  if (rows() != expected_rows) {
    throw InvalidInputError("embedding matrix has " + std::to_string(rows()) + " rows, expected " +
                            std::to_string(expected_rows));
  }
  if (!values_.allFinite()) throw InvalidInputError("embedding matrix has non-finite entries");
}

void write_embeddings(const std::filesystem::path& path, const EmbeddingMatrix& m) {
  if (m.rows() > std::numeric_limits<std::uint32_t>::max() ||
      m.dim() > std::numeric_limits<std::uint32_t>::max()) {
    throw InvalidInputError("embedding matrix too large for the binary format");
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open '" + path.string() + "' for writing");
  const auto rows = static_cast<std::uint32_t>(m.rows());
  const auto cols = static_cast<std::uint32_t>(m.dim());
  f.write(kMagic, sizeof(kMagic));
  f.write(reinterpret_cast<const char*>(&rows), 4);
  f.write(reinterpret_cast<const char*>(&cols), 4);
  std::vector<float> buf(m.dim());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const auto r = m.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) buf[j] = static_cast<float>(r[j]);
    f.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size() * 4));
  }
  if (!f) throw IoError("write failed for '" + path.string() + "'");
}

EmbeddingMatrix read_embeddings(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path.string() + "'");
  char magic[8];
  std::uint32_t rows = 0, cols = 0;
  f.read(magic, 8);
  f.read(reinterpret_cast<char*>(&rows), 4);
  f.read(reinterpret_cast<char*>(&cols), 4);
  if (!f || std::memcmp(magic, kMagic, 8) != 0) {
    throw UnsupportedFormatError("'" + path.string() + "' is not a SUPEMBD1 embedding file");
  }
  EmbeddingMatrix m(rows, cols);
  std::vector<float> buf(cols);
  for (std::size_t i = 0; i < rows; ++i) {
    f.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(cols) * 4);
    if (!f) throw IoError("'" + path.string() + "' is truncated");
    auto r = m.row(i);
    for (std::size_t j = 0; j < cols; ++j) r[j] = buf[j];
  }
  return m;
}

}  // namespace superpart
