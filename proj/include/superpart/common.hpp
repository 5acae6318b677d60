#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace superpart {

using NodeId = std::uint32_t;
using Vec3 = Eigen::Vector3d;

// Error hierarchy. The CLI maps each family onto an exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class ParseError : public IoError {
 public:
  ParseError(const std::string& what, std::size_t line)
      : IoError(what + " (line " + std::to_string(line) + ")"), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class UnsupportedFormatError : public IoError {
 public:
  using IoError::IoError;
};

class InvalidInputError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

class IterationCapError : public Error {
 public:
  using Error::Error;
};

// Block size for reductions. Partial sums are formed per fixed-size block and
// combined by pairwise summation, so the result does not depend on how many
// threads evaluated the blocks.
inline constexpr std::size_t kReductionBlock = 4096;

double pairwise_sum(std::span<const double> values);

// Sum of f(i) for i in [0, n), evaluated in parallel with a reduction order
// that is fixed by n alone.
template <typename F>
double deterministic_sum(std::size_t n, F&& f) {
  const std::size_t n_blocks = (n + kReductionBlock - 1) / kReductionBlock;
  std::vector<double> partial(n_blocks, 0.0);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(n_blocks); ++b) {
    const std::size_t lo = static_cast<std::size_t>(b) * kReductionBlock;
    const std::size_t hi = std::min(n, lo + kReductionBlock);
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) s += f(i);
    partial[static_cast<std::size_t>(b)] = s;
  }
  return pairwise_sum(partial);
}

inline double pairwise_sum(std::span<const double> values) {
  if (values.empty()) return 0.0;
  if (values.size() == 1) return values[0];
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

// Relabels ids to 0..K-1 in order of first appearance. Returns K.
template <typename Id>
std::size_t to_consecutive_ids(std::span<Id> ids) {
  Id max_id = 0;
  for (Id v : ids) max_id = std::max(max_id, v);
  std::vector<Id> remap(ids.empty() ? 0 : static_cast<std::size_t>(max_id) + 1,
                        static_cast<Id>(-1));
  Id next = 0;
  for (Id& v : ids) {
    Id& r = remap[static_cast<std::size_t>(v)];
    if (r == static_cast<Id>(-1)) r = next++;
    v = r;
  }
  return next;
}

}  // namespace superpart
