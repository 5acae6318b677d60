#include "superpart/partition.hpp"

#include "superpart/wcc.hpp"

#include <cmath>
#include <limits>
#include <numeric>

namespace superpart {

void PartitionConfig::validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw InvalidInputError("lambda must be finite and >= 0");
  }
  if (min_size < 1) throw InvalidInputError("minimum superpoint size must be >= 1");
}

std::size_t iteration_cap(std::size_t n_nodes) {
  return static_cast<std::size_t>(10.0 * std::log2(static_cast<double>(std::max<std::size_t>(n_nodes, 1)))) + 50;
}

std::vector<MergeCandidate> merge_step(const ComponentStats& state, const AdjacencyGraph& component_graph,
                                       const PartitionConfig& cfg) {
  const std::size_t n = state.size();
  const auto& edges = component_graph.edges;
  std::vector<double> gains(edges.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ei = 0; ei < static_cast<std::ptrdiff_t>(edges.size()); ++ei) {
    const Edge& e = edges[static_cast<std::size_t>(ei)];
    gains[static_cast<std::size_t>(ei)] =
        merge_gain(state.sizes[e.u], state.means.row(e.u), state.sizes[e.v], state.means.row(e.v), e.weight,
                   cfg.lambda);
  }

  constexpr NodeId kNone = std::numeric_limits<NodeId>::max();
  std::vector<NodeId> best_target(n, kNone);
  std::vector<double> best_gain(n, -std::numeric_limits<double>::infinity());
  // (gain desc, target asc) is a strict total order, so the per-source
  // winner does not depend on the order edges are visited.
  auto offer = [&](NodeId src, NodeId dst, double gain) {
    if (!(gain > 0.0) && state.sizes[src] >= cfg.min_size) return;
    if (gain > best_gain[src] || (gain == best_gain[src] && dst < best_target[src])) {
      best_gain[src] = gain;
      best_target[src] = dst;
    }
  };
  for (std::size_t i = 0; i < edges.size(); ++i) {
    offer(edges[i].u, edges[i].v, gains[i]);
    offer(edges[i].v, edges[i].u, gains[i]);
  }

  std::vector<MergeCandidate> merges;
  for (std::size_t p = 0; p < n; ++p) {
    if (best_target[p] != kNone) merges.push_back({static_cast<NodeId>(p), best_target[p], best_gain[p]});
  }
  return merges;
}

namespace {

std::uint64_t iteration_seed(std::uint64_t seed, std::uint64_t iter) {
  std::uint64_t x = seed + 0x9e3779b97f4a7c15ULL * (iter + 1);
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Running (size, sum) accumulators; means are always recomputed from sums.
struct MergeState {
  std::vector<std::uint64_t> sizes;
  RowMatrix sums;
  std::vector<Vec3> position_sums;
  ComponentStats stats;

  explicit MergeState(const ComponentStats& nodes) : sizes(nodes.sizes), stats(nodes) {
    const std::size_t n = nodes.size();
    sums = nodes.means.matrix();
    position_sums.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double s = static_cast<double>(sizes[i]);
      if (s != 1.0) sums.row(static_cast<Eigen::Index>(i)) *= s;
      position_sums[i] = nodes.centroids[i] * s;
    }
  }

  void contract(std::span<const NodeId> comp, std::size_t k) {
    const auto m = sums.cols();
    std::vector<std::uint64_t> new_sizes(k, 0);
    RowMatrix new_sums = RowMatrix::Zero(static_cast<Eigen::Index>(k), m);
    std::vector<Vec3> new_pos(k, Vec3::Zero());
    for (std::size_t i = 0; i < comp.size(); ++i) {
      const NodeId c = comp[i];
      new_sizes[c] += sizes[i];
      new_sums.row(c) += sums.row(static_cast<Eigen::Index>(i));
      new_pos[c] += position_sums[i];
    }
    sizes = std::move(new_sizes);
    sums = std::move(new_sums);
    position_sums = std::move(new_pos);

    stats.sizes = sizes;
    stats.means = EmbeddingMatrix(k, static_cast<std::size_t>(m));
    stats.centroids.resize(k);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t ci = 0; ci < static_cast<std::ptrdiff_t>(k); ++ci) {
      const auto c = static_cast<std::size_t>(ci);
      const double inv = 1.0 / static_cast<double>(sizes[c]);
      stats.means.matrix().row(ci) = sums.row(ci) * inv;
      stats.centroids[c] = position_sums[c] * inv;
    }
  }
};

void record_iteration(PartitionTrace& trace, const std::vector<MergeCandidate>& merges,
                      std::span<const NodeId> comp, std::size_t before, std::size_t after,
                      std::span<const NodeId> assignment) {
  IterationRecord rec;
  rec.components_before = before;
  rec.components_after = after;
  rec.merges = merges;
  rec.assignment.assign(assignment.begin(), assignment.end());

  std::vector<std::size_t> group_size(after, 0);
  for (NodeId c : comp) ++group_size[c];
  std::vector<char> counted(after, 0);
  for (const MergeCandidate& m : merges) {
    const NodeId g = comp[m.source];
    if (group_size[g] != 2) {
      rec.only_pairwise = false;
      continue;
    }
    // A mutual pair shows up twice with the same gain; count it once.
    if (!counted[g]) {
      rec.pairwise_gain_sum += m.gain;
      counted[g] = 1;
    }
  }
  trace.iterations.push_back(std::move(rec));
}

}  // namespace

Partition greedy_merge(const ComponentStats& nodes, const AdjacencyGraph& graph, const PartitionConfig& cfg,
                       PartitionTrace* trace) {
  cfg.validate();
  const std::size_t n = nodes.size();
  if (n == 0) throw InvalidInputError("cannot partition an empty graph");
  if (graph.n_nodes != n || nodes.means.rows() != n || nodes.centroids.size() != n) {
    throw InvalidInputError("partition inputs disagree on the number of nodes");
  }

  AdjacencyGraph g = prepare_graph(graph, nodes.centroids, cfg.knn_reconnect);
  MergeState state(nodes);
  std::vector<NodeId> assignment(n);
  std::iota(assignment.begin(), assignment.end(), NodeId{0});
  std::size_t n_cur = n;
  const std::size_t cap = iteration_cap(n);

  for (std::size_t iter = 0; n_cur > 1 && !g.edges.empty(); ++iter) {
    if (iter >= cap) {
      throw IterationCapError("partition did not converge within " + std::to_string(cap) +
                              " iterations (" + std::to_string(n_cur) + " components left)");
    }
    const std::vector<MergeCandidate> merges = merge_step(state.stats, g, cfg);
    if (merges.empty()) break;

    std::vector<Edge> merge_edges;
    merge_edges.reserve(merges.size());
    for (const MergeCandidate& m : merges) merge_edges.push_back({m.source, m.target, 1.0});
    const std::vector<NodeId> comp = wcc_max_prop(n_cur, merge_edges, iteration_seed(cfg.seed, iter));
    const std::size_t k = static_cast<std::size_t>(*std::max_element(comp.begin(), comp.end())) + 1;

#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
      auto& a = assignment[static_cast<std::size_t>(i)];
      a = comp[a];
    }
    state.contract(comp, k);
    g = contract_graph(g, comp, k);
    if (trace) record_iteration(*trace, merges, comp, n_cur, k, assignment);
    n_cur = k;
  }

  Partition p;
  p.assignment = std::move(assignment);
  p.n_components = n_cur;
  p.components = std::move(state.stats);
  p.component_graph = std::move(g);
  return p;
}

Partition greedy_partition(const EmbeddingMatrix& F, const AdjacencyGraph& graph,
                           std::span<const Vec3> positions, const PartitionConfig& cfg,
                           PartitionTrace* trace) {
  F.validate(graph.n_nodes);
  if (positions.size() != F.rows()) throw InvalidInputError("one position per node is required");
  ComponentStats nodes;
  nodes.sizes.assign(F.rows(), 1);
  nodes.means = F;
  nodes.centroids.assign(positions.begin(), positions.end());
  return greedy_merge(nodes, graph, cfg, trace);
}

HierarchicalPartition hierarchical_partition(const EmbeddingMatrix& F, const AdjacencyGraph& graph,
                                             std::span<const Vec3> positions,
                                             std::span<const PartitionConfig> levels) {
  if (levels.empty()) throw InvalidInputError("hierarchical partition needs at least one level");
  for (const PartitionConfig& c : levels) c.validate();

  HierarchicalPartition h;
  for (std::size_t l = 1; l < levels.size(); ++l) {
    if (levels[l].min_size < levels[l - 1].min_size) {
      h.warnings.push_back("minimum size decreases from level " + std::to_string(l) + " to level " +
                           std::to_string(l + 1));
    }
  }

  h.levels.push_back(greedy_partition(F, graph, positions, levels[0]));
  for (std::size_t l = 1; l < levels.size(); ++l) {
    const Partition& prev = h.levels.back();
    Partition next = greedy_merge(prev.components, prev.component_graph, levels[l]);
    std::vector<NodeId> map = std::move(next.assignment);
    next.assignment.resize(prev.assignment.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(prev.assignment.size()); ++i) {
      next.assignment[static_cast<std::size_t>(i)] = map[prev.assignment[static_cast<std::size_t>(i)]];
    }
    h.maps.push_back(std::move(map));
    h.levels.push_back(std::move(next));
  }
  return h;
}

}  // namespace superpart
