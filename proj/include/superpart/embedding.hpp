#pragma once

#include "superpart/common.hpp"

#include <Eigen/Core>

#include <filesystem>
#include <span>

namespace superpart {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// N x M per-node embeddings, one row per node.
class EmbeddingMatrix {
 public:
  EmbeddingMatrix() = default;
  EmbeddingMatrix(std::size_t rows, std::size_t dim) : values_(RowMatrix::Zero(rows, dim)) {}
  explicit EmbeddingMatrix(RowMatrix values) : values_(std::move(values)) {}

  std::size_t rows() const { return static_cast<std::size_t>(values_.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(values_.cols()); }

  std::span<const double> row(std::size_t i) const {
    return {values_.data() + i * dim(), dim()};
  }
  std::span<double> row(std::size_t i) { return {values_.data() + i * dim(), dim()}; }

  double& operator()(std::size_t i, std::size_t j) { return values_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)); }
  double operator()(std::size_t i, std::size_t j) const { return values_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)); }

  const RowMatrix& matrix() const { return values_; }
  RowMatrix& matrix() { return values_; }

  // Throws InvalidInputError on non-finite entries or a row-count mismatch.
  void validate(std::size_t expected_rows) const;

  friend bool operator==(const EmbeddingMatrix& a, const EmbeddingMatrix& b) {
    return a.values_.rows() == b.values_.rows() && a.values_.cols() == b.values_.cols() &&
           a.values_ == b.values_;
  }

 private:
  RowMatrix values_;
};

// Binary layout: "SUPEMBD1", u32 rows, u32 cols, rows*cols f32 little-endian,
// row-major.
void write_embeddings(const std::filesystem::path& path, const EmbeddingMatrix& m);
EmbeddingMatrix read_embeddings(const std::filesystem::path& path);

}  // namespace superpart
