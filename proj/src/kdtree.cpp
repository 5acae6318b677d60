#include "superpart/kdtree.hpp"

#include <algorithm>
#include <numeric>

namespace superpart {

namespace {

void insert_bounded(std::vector<Neighbor>& best, std::size_t k, Neighbor cand) {
  if (best.size() == k) {
    if (!(cand < best.back())) return;
    best.pop_back();
  }
  best.insert(std::upper_bound(best.begin(), best.end(), cand), cand);
}

std::vector<Neighbor> brute_knn(std::span<const Vec3> points, const Vec3& q, std::size_t k,
                                NodeId exclude) {
  std::vector<Neighbor> best;
  best.reserve(k + 1);
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (static_cast<NodeId>(i) == exclude) continue;
    insert_bounded(best, k, {squared_distance(points[i], q), static_cast<NodeId>(i)});
  }
  return best;
}

}  // namespace

KdTree::KdTree(std::span<const Vec3> points, std::size_t leaf_size)
    : points_(points.begin(), points.end()), order_(points.size()), leaf_size_(std::max<std::size_t>(leaf_size, 1)) {
  std::iota(order_.begin(), order_.end(), NodeId{0});
  if (!points_.empty()) {
    nodes_.reserve(2 * points_.size() / leaf_size_ + 1);
    build(0, static_cast<std::uint32_t>(points_.size()));
    std::vector<Vec3> sorted(points_.size());
    for (std::size_t i = 0; i < order_.size(); ++i) sorted[i] = points[order_[i]];
    points_ = std::move(sorted);
  }
}

std::int32_t KdTree::build(std::uint32_t begin, std::uint32_t end) {
  const auto id = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back({begin, end});
  if (end - begin <= leaf_size_) return id;

  Eigen::Array3d lo = points_[order_[begin]].array();
  Eigen::Array3d hi = lo;
  for (std::uint32_t i = begin; i < end; ++i) {
    lo = lo.min(points_[order_[i]].array());
    hi = hi.max(points_[order_[i]].array());
  }
  int dim = 0;
  (hi - lo).maxCoeff(&dim);
  if (hi[dim] == lo[dim]) return id;  // all coincident

  const std::uint32_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](NodeId a, NodeId b) { return points_[a][dim] < points_[b][dim]; });
  const double split = points_[order_[mid]][dim];
  const std::int32_t left = build(begin, mid);
  const std::int32_t right = build(mid, end);
  Node& n = nodes_[static_cast<std::size_t>(id)];
  n.left = left;
  n.right = right;
  n.dim = dim;
  n.split = split;
  return id;
}

void KdTree::search(std::int32_t node_id, const Vec3& q, std::size_t k, NodeId exclude,
                    std::vector<Neighbor>& best) const {
  const Node& node = nodes_[static_cast<std::size_t>(node_id)];
  if (node.left < 0) {
    for (std::uint32_t i = node.begin; i < node.end; ++i) {
      if (order_[i] == exclude) continue;
      insert_bounded(best, k, {squared_distance(points_[i], q), order_[i]});
    }
    return;
  }
  const double diff = q[node.dim] - node.split;
  const std::int32_t near = diff < 0 ? node.left : node.right;
  const std::int32_t far = diff < 0 ? node.right : node.left;
  search(near, q, k, exclude, best);
  // Not pruned on equality: an equally distant point may carry a smaller index.
  if (best.size() < k || diff * diff <= best.back().dist2) search(far, q, k, exclude, best);
}

std::vector<Neighbor> KdTree::knn(const Vec3& query, std::size_t k, NodeId exclude) const {
  std::vector<Neighbor> best;
  if (k == 0 || nodes_.empty()) return best;
  best.reserve(k + 1);
  search(0, query, k, exclude, best);
  return best;
}

std::vector<NodeId> knn_all(std::span<const Vec3> points, std::size_t k) {
  const std::size_t n = points.size();
  if (k >= n) throw InvalidInputError("k-NN requires more points than neighbors");
  std::vector<NodeId> out(n * k);
  const bool brute = n < kBruteForceThreshold;
  const KdTree tree = brute ? KdTree({}) : KdTree(points);
#pragma omp parallel for schedule(dynamic, 1024)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
    const auto self = static_cast<NodeId>(i);
    const auto nn = brute ? brute_knn(points, points[self], k, self)
                          : tree.knn(points[self], k, self);
    for (std::size_t j = 0; j < k; ++j) out[self * k + j] = nn[j].index;
  }
  return out;
}

std::vector<NodeId> knn_query(std::span<const Vec3> targets, std::span<const Vec3> queries,
                              std::size_t k) {
  k = std::min(k, targets.size());
  std::vector<NodeId> out(queries.size() * k);
  if (k == 0) return out;
  const bool brute = targets.size() < kBruteForceThreshold;
  const KdTree tree = brute ? KdTree({}) : KdTree(targets);
#pragma omp parallel for schedule(dynamic, 256)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(queries.size()); ++i) {
    const auto qi = static_cast<std::size_t>(i);
    const auto nn = brute ? brute_knn(targets, queries[qi], k, static_cast<NodeId>(-1))
                          : tree.knn(queries[qi], k);
    for (std::size_t j = 0; j < k; ++j) out[qi * k + j] = nn[j].index;
  }
  return out;
}

}  // namespace superpart
