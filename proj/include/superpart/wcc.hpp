#pragma once

#include "superpart/graph.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace superpart {

// Weakly connected components by recursive max propagation: draw a random
// permutation of node ids, let every node take the max id over its closed
// neighborhood, contract nodes sharing an id and recurse on the contracted
// graph until no edge remains. Self-loops are ignored. Returned ids are
// consecutive from 0 in order of first appearance, so the output does not
// depend on the seed.
std::vector<NodeId> wcc_max_prop(std::size_t n_nodes, std::span<const Edge> edges, std::uint64_t seed);

// Number of recursion rounds used by the last wcc_max_prop call on this
// thread (diagnostics and tests).
std::size_t wcc_last_rounds();

// Graph between components: edge weights crossing each component pair are
// summed, intra-component edges dropped. Output is canonical.
AdjacencyGraph contract_graph(const AdjacencyGraph& graph, std::span<const NodeId> assignment,
                              std::size_t n_components);

}  // namespace superpart
