#pragma once

#include "superpart/embedding.hpp"
#include "superpart/graph.hpp"
#include "superpart/point_cloud.hpp"
#include "superpart/transition.hpp"

#include <string>
#include <vector>

namespace superpart {

struct FeatureChannels {
  bool linearity = true;
  bool planarity = true;
  bool scattering = true;
  bool verticality = true;
  bool elevation = true;
  bool color = true;      // skipped when the cloud has no colors
  bool intensity = true;  // skipped when the cloud has no intensity

  bool any() const {
    return linearity || planarity || scattering || verticality || elevation || color || intensity;
  }
};

struct FeatureConfig {
  std::size_t neighborhood_k = 16;
  FeatureChannels channels;
  bool normalize = true;  // per-channel min-max over the cloud

  void validate() const;
};

// Names of the channels geometric_features would emit for this cloud, in
// column order.
std::vector<std::string> feature_channel_names(const PointCloud& cloud, const FeatureConfig& cfg);

// Per point, from the eigenvalues l1 >= l2 >= l3 of the covariance of the point
// and its k nearest neighbors:
//   linearity   (sqrt l1 - sqrt l2) / sqrt l1
//   planarity   (sqrt l2 - sqrt l3) / sqrt l1
//   scattering  sqrt l3 / sqrt l1
//   verticality |n . z|, n the smallest-eigenvalue eigenvector
// followed by elevation, color and intensity. Degenerate neighborhoods give 0.
EmbeddingMatrix geometric_features(const PointCloud& cloud, const FeatureConfig& cfg);

struct FitConfig {
  std::size_t out_dim = 8;
  std::size_t steps = 200;
  double lr = 0.5;
  std::uint64_t seed = 0;
};

struct LinearEmbeddingFit {
  RowMatrix weights;  // in_dim x out_dim
  EmbeddingMatrix embeddings;
  std::vector<double> sampled_loss;  // mean loss on each step's sampled edges
  double initial_full_loss = 0.0;    // mean loss over every edge
  double final_full_loss = 0.0;
};

// Initial weights drawn from N(0, 1/in_dim) with the given seed.
RowMatrix initial_linear_weights(std::size_t in_dim, std::size_t out_dim, std::uint64_t seed);

// Gradient descent on the contrastive transition loss through f = X W. Each
// step resamples intra edges; the returned weights are the iterate with the
// lowest loss over the full edge set, so the result never scores worse than
// the initialization. Throws NumericalError on a non-finite loss.
LinearEmbeddingFit fit_linear_embedding(const EmbeddingMatrix& features, const AdjacencyGraph& graph,
                                        std::span<const std::uint32_t> labels,
                                        const TransitionConfig& transition, const FitConfig& fit);

}  // namespace superpart
