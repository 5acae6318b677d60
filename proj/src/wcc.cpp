#include "superpart/wcc.hpp"

#include <algorithm>
#include <numeric>
#include <random>

namespace superpart {

namespace {

thread_local std::size_t last_rounds = 0;

std::uint64_t round_seed(std::uint64_t seed, std::uint64_t round) {
  std::uint64_t x = seed ^ (0x9e3779b97f4a7c15ULL * (round + 1));
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

using EdgePair = std::pair<NodeId, NodeId>;

// Canonical, deduplicated, self-loop-free copy.
std::vector<EdgePair> canonical_pairs(std::vector<EdgePair> pairs) {
  std::erase_if(pairs, [](const EdgePair& e) { return e.first == e.second; });
  for (auto& e : pairs) {
    if (e.first > e.second) std::swap(e.first, e.second);
  }
  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
  return pairs;
}

// Closed-neighborhood max of `ids` for every node.
std::vector<NodeId> max_propagation(std::size_t n, std::span<const EdgePair> edges,
                                    std::span<const NodeId> ids) {
  std::vector<std::size_t> offsets(n + 1, 0);
  for (const auto& [u, v] : edges) {
    ++offsets[u + 1];
    ++offsets[v + 1];
  }
  for (std::size_t i = 0; i < n; ++i) offsets[i + 1] += offsets[i];
  std::vector<NodeId> nbr(offsets[n]);
  {
    std::vector<std::size_t> fill(offsets.begin(), offsets.end() - 1);
    for (const auto& [u, v] : edges) {
      nbr[fill[u]++] = v;
      nbr[fill[v]++] = u;
    }
  }
  std::vector<NodeId> out(n);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(n); ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    NodeId m = ids[i];
    for (std::size_t k = offsets[i]; k < offsets[i + 1]; ++k) m = std::max(m, ids[nbr[k]]);
    out[i] = m;
  }
  return out;
}

}  // namespace

std::size_t wcc_last_rounds() { return last_rounds; }

std::vector<NodeId> wcc_max_prop(std::size_t n_nodes, std::span<const Edge> edges, std::uint64_t seed) {
  std::vector<EdgePair> pairs;
  pairs.reserve(edges.size());
  for (const Edge& e : edges) {
    if (e.u >= n_nodes || e.v >= n_nodes) throw InvalidInputError("edge endpoint out of range");
    pairs.emplace_back(e.u, e.v);
  }
  pairs = canonical_pairs(std::move(pairs));

  // comp[i]: node of the current (contracted) graph holding original node i.
  std::vector<NodeId> comp(n_nodes);
  std::iota(comp.begin(), comp.end(), NodeId{0});
  std::size_t n = n_nodes;
  std::size_t round = 0;

  while (!pairs.empty()) {
    std::vector<NodeId> ids(n);
    std::iota(ids.begin(), ids.end(), NodeId{0});
    std::mt19937_64 rng(round_seed(seed, round));
    std::shuffle(ids.begin(), ids.end(), rng);

    std::vector<NodeId> maxed = max_propagation(n, pairs, ids);
    if (maxed == ids) break;  // only reachable without edges
    const std::size_t n_next = to_consecutive_ids(std::span<NodeId>(maxed));

#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n_nodes); ++i) {
      comp[static_cast<std::size_t>(i)] = maxed[comp[static_cast<std::size_t>(i)]];
    }
    for (auto& [u, v] : pairs) {
      u = maxed[u];
      v = maxed[v];
    }
    pairs = canonical_pairs(std::move(pairs));
    n = n_next;
    ++round;
  }
  last_rounds = round;
  to_consecutive_ids(std::span<NodeId>(comp));
  return comp;
}

AdjacencyGraph contract_graph(const AdjacencyGraph& graph, std::span<const NodeId> assignment,
                              std::size_t n_components) {
  if (assignment.size() != graph.n_nodes) {
    throw InvalidInputError("contract_graph: assignment does not cover the graph");
  }
  struct Keyed {
    std::uint64_t key;
    double weight;
  };
  std::vector<Keyed> keyed;
  keyed.reserve(graph.edges.size());
  for (const Edge& e : graph.edges) {
    NodeId a = assignment[e.u];
    NodeId b = assignment[e.v];
    if (a == b) continue;
    if (a > b) std::swap(a, b);
    keyed.push_back({(static_cast<std::uint64_t>(a) << 32) | b, e.weight});
  }
  // Stable so that duplicate weights are summed in input order.
  std::stable_sort(keyed.begin(), keyed.end(),
                   [](const Keyed& x, const Keyed& y) { return x.key < y.key; });
  AdjacencyGraph out;
  out.n_nodes = n_components;
  for (const Keyed& k : keyed) {
    const auto u = static_cast<NodeId>(k.key >> 32);
    const auto v = static_cast<NodeId>(k.key & 0xffffffffu);
    if (!out.edges.empty() && out.edges.back().u == u && out.edges.back().v == v) {
      out.edges.back().weight += k.weight;
    } else {
      out.edges.push_back({u, v, k.weight});
    }
  }
  return out;
}

}  // namespace superpart
