#include "superpart/energy.hpp"

#include <limits>

namespace superpart {

Superpoint ComponentStats::at(std::size_t i) const {
  const auto m = means.row(i);
  return {sizes[i], std::vector<double>(m.begin(), m.end()), centroids[i]};
}

namespace {

std::size_t checked_component_count(std::span<const NodeId> assignment) {
  if (assignment.empty()) return 0;
  NodeId max_id = 0;
  for (NodeId c : assignment) max_id = std::max(max_id, c);
  const std::size_t k = static_cast<std::size_t>(max_id) + 1;
  std::vector<char> seen(k, 0);
  for (NodeId c : assignment) seen[c] = 1;
  for (std::size_t c = 0; c < k; ++c) {
    if (!seen[c]) throw InvalidInputError("component id " + std::to_string(c) + " is empty");
  }
  return k;
}

}  // namespace

ComponentStats superpoint_stats(const EmbeddingMatrix& F, std::span<const NodeId> assignment,
                                std::span<const Vec3> positions) {
  if (assignment.size() != F.rows() || positions.size() != F.rows()) {
    throw InvalidInputError("superpoint_stats: assignment, embeddings and positions disagree in length");
  }
  ComponentStats unit;
  unit.sizes.assign(F.rows(), 1);
  unit.means = F;
  unit.centroids.assign(positions.begin(), positions.end());
  return aggregate_stats(unit, assignment, checked_component_count(assignment));
}

ComponentStats aggregate_stats(const ComponentStats& nodes, std::span<const NodeId> assignment,
                               std::size_t n_components) {
  const std::size_t m = nodes.means.dim();
  ComponentStats out;
  out.sizes.assign(n_components, 0);
  out.means = EmbeddingMatrix(n_components, m);
  out.centroids.assign(n_components, Vec3::Zero());
  // Sequential in node order: the summation order is fixed by the input.
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    const NodeId c = assignment[i];
    const std::uint64_t s = nodes.sizes[i];
    const double ws = static_cast<double>(s);
    out.sizes[c] += s;
    auto dst = out.means.row(c);
    const auto src = nodes.means.row(i);
    for (std::size_t j = 0; j < m; ++j) dst[j] += ws * src[j];
    out.centroids[c] += ws * nodes.centroids[i];
  }
  for (std::size_t c = 0; c < n_components; ++c) {
    if (out.sizes[c] == 0) throw InvalidInputError("component id " + std::to_string(c) + " is empty");
    const double inv = 1.0 / static_cast<double>(out.sizes[c]);
    for (double& v : out.means.row(c)) v *= inv;
    out.centroids[c] *= inv;
  }
  return out;
}

PartitionEnergyBreakdown energy(const EmbeddingMatrix& F, const AdjacencyGraph& graph,
                                std::span<const NodeId> assignment, double lambda) {
  if (assignment.size() != F.rows() || graph.n_nodes != F.rows()) {
    throw InvalidInputError("energy: assignment, embeddings and graph disagree in size");
  }
  const std::size_t n = F.rows();
  const std::size_t m = F.dim();
  NodeId max_id = 0;
  for (NodeId c : assignment) max_id = std::max(max_id, c);
  const std::size_t k = n == 0 ? 0 : static_cast<std::size_t>(max_id) + 1;

  std::vector<double> counts(k, 0.0);
  EmbeddingMatrix means(k, m);
  for (std::size_t i = 0; i < n; ++i) {
    counts[assignment[i]] += 1.0;
    auto dst = means.row(assignment[i]);
    const auto src = F.row(i);
    for (std::size_t j = 0; j < m; ++j) dst[j] += src[j];
  }
  for (std::size_t c = 0; c < k; ++c) {
    if (counts[c] == 0.0) continue;
    for (double& v : means.row(c)) v /= counts[c];
  }

  PartitionEnergyBreakdown e;
  e.fidelity = deterministic_sum(n, [&](std::size_t i) {
    const auto f = F.row(i);
    const auto mu = means.row(assignment[i]);
    double s = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      const double d = f[j] - mu[j];
      s += d * d;
    }
    return s;
  });
  e.contour = lambda * deterministic_sum(graph.edges.size(), [&](std::size_t i) {
                const Edge& edge = graph.edges[i];
                return assignment[edge.u] != assignment[edge.v] ? edge.weight : 0.0;
              });
  e.total = e.fidelity + e.contour;
  return e;
}

double merge_gain(std::uint64_t size_p, std::span<const double> mean_p, std::uint64_t size_q,
                  std::span<const double> mean_q, double w_pq, double lambda) {
  double d2 = 0.0;
  for (std::size_t j = 0; j < mean_p.size(); ++j) {
    const double d = mean_p[j] - mean_q[j];
    d2 += d * d;
  }
  const double sp = static_cast<double>(size_p);
  const double sq = static_cast<double>(size_q);
  return -(sp * sq / (sp + sq)) * d2 + lambda * w_pq;
}

double merge_gain(const Superpoint& P, const Superpoint& Q, double w_pq, double lambda) {
  if (P.mean_embedding.size() != Q.mean_embedding.size()) {
    throw InvalidInputError("merge_gain needs equal embedding dimensions");
  }
  return merge_gain(P.size, P.mean_embedding, Q.size, Q.mean_embedding, w_pq, lambda);
}

BruteForceResult brute_force_best_partition(const EmbeddingMatrix& F, const AdjacencyGraph& graph,
                                            double lambda, std::size_t max_nodes) {
  const std::size_t n = graph.n_nodes;
  if (n > max_nodes || n > 20) {
    throw InvalidInputError("brute-force partition refused: " + std::to_string(n) +
                            " nodes exceeds the limit of " + std::to_string(max_nodes));
  }
  if (F.rows() != n) throw InvalidInputError("brute-force partition: embeddings do not match graph");
  BruteForceResult best;
  best.energy = std::numeric_limits<double>::infinity();
  if (n == 0) return best;

  std::vector<std::uint32_t> adj(n, 0);
  for (const Edge& e : graph.edges) {
    if (e.u == e.v) continue;
    adj[e.u] |= 1u << e.v;
    adj[e.v] |= 1u << e.u;
  }
  auto connected = [&](std::uint32_t block) {
    const std::uint32_t start = block & (~block + 1);
    std::uint32_t reached = start, frontier = start;
    while (frontier) {
      std::uint32_t next = 0;
      for (std::uint32_t f = frontier; f; f &= f - 1) next |= adj[static_cast<std::size_t>(__builtin_ctz(f))];
      next &= block & ~reached;
      reached |= next;
      frontier = next;
    }
    return reached == block;
  };

  // Restricted growth strings enumerate every set partition exactly once.
  std::vector<NodeId> rgs(n, 0);
  std::vector<NodeId> prefix_max(n, 0);
  while (true) {
    const NodeId n_blocks = prefix_max[n - 1] + 1;
    std::vector<std::uint32_t> blocks(n_blocks, 0);
    for (std::size_t i = 0; i < n; ++i) blocks[rgs[i]] |= 1u << i;
    bool ok = true;
    for (std::uint32_t b : blocks) {
      if (!connected(b)) {
        ok = false;
        break;
      }
    }
    if (ok) {
      ++best.candidates;
      const double e = energy(F, graph, rgs, lambda).total;
      if (e < best.energy) {
        best.energy = e;
        best.assignment = rgs;
      }
    }
    // Next restricted growth string.
    std::size_t i = n - 1;
    while (i > 0 && rgs[i] == prefix_max[i - 1] + 1) --i;
    if (i == 0) break;
    ++rgs[i];
    prefix_max[i] = std::max(prefix_max[i - 1], rgs[i]);
    for (std::size_t j = i + 1; j < n; ++j) {
      rgs[j] = 0;
      prefix_max[j] = prefix_max[j - 1];
    }
  }
  return best;
}

}  // namespace superpart
