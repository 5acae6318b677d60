#pragma once

#include "superpart/common.hpp"

#include <span>
#include <vector>

namespace superpart {

struct Neighbor {
  double dist2;
  NodeId index;

  friend bool operator<(const Neighbor& a, const Neighbor& b) {
    return a.dist2 < b.dist2 || (a.dist2 == b.dist2 && a.index < b.index);
  }
  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

// Squared Euclidean distance; every k-NN path in the library goes through this
// so that tree and brute-force results agree bit for bit.
inline double squared_distance(const Vec3& a, const Vec3& b) {
  const double dx = a.x() - b.x();
  const double dy = a.y() - b.y();
  const double dz = a.z() - b.z();
  return dx * dx + dy * dy + dz * dz;
}

// Exact k-nearest-neighbor search over a static 3D point set. Results are
// ordered by (distance, point index), so ties resolve to the smaller index.
class KdTree {
 public:
  explicit KdTree(std::span<const Vec3> points, std::size_t leaf_size = 12);

  // The k nearest points to `query`, excluding point `exclude` if it is a
  // valid index. Returns fewer than k when the set is smaller.
  std::vector<Neighbor> knn(const Vec3& query, std::size_t k,
                            NodeId exclude = static_cast<NodeId>(-1)) const;

  std::size_t size() const { return points_.size(); }

 private:
  struct Node {
    std::uint32_t begin, end;  // range in order_/points_
    std::int32_t left = -1, right = -1;
    int dim = 0;
    double split = 0.0;
  };

  std::int32_t build(std::uint32_t begin, std::uint32_t end);
  void search(std::int32_t node, const Vec3& q, std::size_t k, NodeId exclude,
              std::vector<Neighbor>& best) const;

  std::vector<Vec3> points_;    // in tree order
  std::vector<NodeId> order_;   // tree slot -> original index
  std::vector<Node> nodes_;
  std::size_t leaf_size_;
};

// Brute-force fallback below this many points.
inline constexpr std::size_t kBruteForceThreshold = 256;

// k nearest neighbors of every point (self excluded), row-major n x k.
// Parallel over queries; output is independent of thread count.
std::vector<NodeId> knn_all(std::span<const Vec3> points, std::size_t k);

// k nearest points of `targets` to each query (no exclusion), row-major.
std::vector<NodeId> knn_query(std::span<const Vec3> targets, std::span<const Vec3> queries,
                              std::size_t k);

}  // namespace superpart
