#pragma once

#include "superpart/embedding.hpp"
#include "superpart/graph.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace superpart {

struct TransitionConfig {
  double tau = 1.0;
  double rho_intra = 0.1;  // 0.1 indoor, 0.3 outdoor
  std::uint64_t seed = 0;

  void validate() const;
};

// exp(-||f_p - f_q|| / tau)
double affinity(std::span<const double> f_p, std::span<const double> f_q, double tau);

struct TaggedEdge {
  NodeId u;
  NodeId v;
  bool inter;  // endpoints carry different labels

  friend bool operator==(const TaggedEdge&, const TaggedEdge&) = default;
};

// Largest number of intra edges allowed next to `n_inter` inter edges so that
// intra edges are at most a fraction rho of the sampled set:
// floor(rho * n_inter / (1 - rho)), unbounded for rho = 1.
std::size_t intra_quota(std::size_t n_inter, double rho);

// Keeps every inter edge and a uniform sample (without replacement) of
// min(|intra|, intra_quota) intra edges. With no inter edge, all intra edges
// are kept. Sampled intra edges come first, in their original order.
std::vector<TaggedEdge> sample_edges(std::span<const Edge> intra, std::span<const Edge> inter,
                                     const TransitionConfig& cfg);

// Every edge tagged, nothing dropped.
std::vector<TaggedEdge> tag_all_edges(const EdgeSplit& split);

inline constexpr double kAffinityClampEps = 1e-12;

struct TransitionLoss {
  double loss = 0.0;
  RowMatrix grad;               // d loss / d F, same shape as F
  std::size_t clamped_edges = 0;  // inter edges with affinity clamped to 1 - eps
};

// Contrastive transition loss over the tagged edges:
//   sum_intra -log a + sum_inter -log(1 - a)
// with its exact gradient. Set `with_gradient` false to skip the gradient.
TransitionLoss transition_loss(const EmbeddingMatrix& F, std::span<const TaggedEdge> edges,
                               const TransitionConfig& cfg, bool with_gradient = true);

}  // namespace superpart
