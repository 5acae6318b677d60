#include "superpart/features.hpp"

#include "superpart/kdtree.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <random>

namespace superpart {

void FeatureConfig::validate() const {
  if (neighborhood_k < 3) throw InvalidInputError("feature neighborhood_k must be at least 3");
  if (!channels.any()) throw InvalidInputError("at least one feature channel must be enabled");
}

namespace {

struct ChannelLayout {
  bool color = false;
  bool intensity = false;
  std::size_t dim = 0;
};

ChannelLayout layout_for(const PointCloud& cloud, const FeatureConfig& cfg) {
  ChannelLayout l;
  const FeatureChannels& c = cfg.channels;
  l.dim = static_cast<std::size_t>(c.linearity) + c.planarity + c.scattering + c.verticality + c.elevation;
  l.color = c.color && cloud.colors.has_value();
  l.intensity = c.intensity && cloud.intensity.has_value();
  l.dim += (l.color ? 3 : 0) + (l.intensity ? 1 : 0);
  return l;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t x = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::vector<std::string> feature_channel_names(const PointCloud& cloud, const FeatureConfig& cfg) {
  const ChannelLayout l = layout_for(cloud, cfg);
  std::vector<std::string> names;
  const FeatureChannels& c = cfg.channels;
  if (c.linearity) names.emplace_back("linearity");
  if (c.planarity) names.emplace_back("planarity");
  if (c.scattering) names.emplace_back("scattering");
  if (c.verticality) names.emplace_back("verticality");
  if (c.elevation) names.emplace_back("elevation");
  if (l.color) {
    names.emplace_back("red");
    names.emplace_back("green");
    names.emplace_back("blue");
  }
  if (l.intensity) names.emplace_back("intensity");
  return names;
}

EmbeddingMatrix geometric_features(const PointCloud& cloud, const FeatureConfig& cfg) {
  cfg.validate();
  cloud.validate();
  const std::size_t n = cloud.size();
  const std::size_t k = cfg.neighborhood_k;
  if (n <= k) {
    throw InvalidInputError("geometric features need more points than neighborhood_k");
  }
  const ChannelLayout layout = layout_for(cloud, cfg);
  if (layout.dim == 0) throw InvalidInputError("no enabled feature channel is available on this cloud");

  const std::vector<NodeId> nn = knn_all(cloud.positions, k);
  EmbeddingMatrix out(n, layout.dim);
  const FeatureChannels& ch = cfg.channels;

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t pi = 0; pi < static_cast<std::ptrdiff_t>(n); ++pi) {
    const auto p = static_cast<std::size_t>(pi);
    const NodeId* row = nn.data() + p * k;
    Vec3 mean = cloud.positions[p];
    for (std::size_t j = 0; j < k; ++j) mean += cloud.positions[row[j]];
    mean /= static_cast<double>(k + 1);
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    auto accumulate = [&](const Vec3& q) {
      const Vec3 d = q - mean;
      cov.noalias() += d * d.transpose();
    };
    accumulate(cloud.positions[p]);
    for (std::size_t j = 0; j < k; ++j) accumulate(cloud.positions[row[j]]);
    cov /= static_cast<double>(k + 1);

    double linearity = 0.0, planarity = 0.0, scattering = 0.0, verticality = 0.0;
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
    if (eig.info() == Eigen::Success) {
      // Ascending order: index 2 is the largest.
      const Eigen::Vector3d ev = eig.eigenvalues().cwiseMax(0.0);
      const double s1 = std::sqrt(ev[2]);
      const double s2 = std::sqrt(ev[1]);
      const double s3 = std::sqrt(ev[0]);
      if (s1 > 0.0) {
        linearity = (s1 - s2) / s1;
        planarity = (s2 - s3) / s1;
        scattering = s3 / s1;
        verticality = std::abs(eig.eigenvectors().col(0).z());
      }
    }

    auto f = out.row(p);
    std::size_t c = 0;
    if (ch.linearity) f[c++] = linearity;
    if (ch.planarity) f[c++] = planarity;
    if (ch.scattering) f[c++] = scattering;
    if (ch.verticality) f[c++] = std::min(verticality, 1.0);
    if (ch.elevation) f[c++] = cloud.positions[p].z();
    if (layout.color) {
      for (float v : (*cloud.colors)[p]) f[c++] = v;
    }
    if (layout.intensity) f[c++] = (*cloud.intensity)[p];
  }

  if (cfg.normalize) {
    RowMatrix& m = out.matrix();
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      const double lo = m.col(j).minCoeff();
      const double hi = m.col(j).maxCoeff();
      if (hi > lo) {
        m.col(j) = ((m.col(j).array() - lo) / (hi - lo)).cwiseMax(0.0).cwiseMin(1.0).matrix();
      } else {
        m.col(j).setZero();
      }
    }
  }
  return out;
}

RowMatrix initial_linear_weights(std::size_t in_dim, std::size_t out_dim, std::uint64_t seed) {
  std::mt19937_64 rng(mix_seed(seed, 0));
  std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(in_dim, 1))));
  RowMatrix w(static_cast<Eigen::Index>(in_dim), static_cast<Eigen::Index>(out_dim));
  for (Eigen::Index i = 0; i < w.rows(); ++i) {
    for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = normal(rng);
  }
  return w;
}

LinearEmbeddingFit fit_linear_embedding(const EmbeddingMatrix& features, const AdjacencyGraph& graph,
                                        std::span<const std::uint32_t> labels,
                                        const TransitionConfig& transition, const FitConfig& fit) {
  transition.validate();
  features.validate(graph.n_nodes);
  if (fit.out_dim == 0) throw InvalidInputError("embedding output dimension must be positive");
  if (!(fit.lr >= 0.0) || !std::isfinite(fit.lr)) throw InvalidInputError("learning rate must be >= 0");
  const EdgeSplit split = split_edges_by_label(graph, labels);
  const std::vector<TaggedEdge> all_edges = tag_all_edges(split);
  if (all_edges.empty()) throw InvalidInputError("embedding fit needs a graph with edges");

  const RowMatrix& X = features.matrix();
  LinearEmbeddingFit result;
  RowMatrix w = initial_linear_weights(features.dim(), fit.out_dim, fit.seed);

  auto full_loss = [&](const RowMatrix& weights) {
    const EmbeddingMatrix F(X * weights);
    return transition_loss(F, all_edges, transition, false).loss / static_cast<double>(all_edges.size());
  };
  auto check_finite = [&](double loss, std::size_t step) {
    if (!std::isfinite(loss)) {
      throw NumericalError("transition loss became non-finite at step " + std::to_string(step) +
                           " (lr=" + std::to_string(fit.lr) + "); try a smaller learning rate");
    }
  };

  result.initial_full_loss = full_loss(w);
  check_finite(result.initial_full_loss, 0);
  double best_loss = result.initial_full_loss;
  RowMatrix best_w = w;

  for (std::size_t step = 0; step < fit.steps; ++step) {
    TransitionConfig step_cfg = transition;
    step_cfg.seed = mix_seed(transition.seed, step + 1);
    const auto edges = sample_edges(split.intra, split.inter, step_cfg);
    const EmbeddingMatrix F(X * w);
    const TransitionLoss tl = transition_loss(F, edges, step_cfg);
    const double scale = 1.0 / static_cast<double>(edges.size());
    result.sampled_loss.push_back(tl.loss * scale);
    check_finite(tl.loss, step + 1);

    w.noalias() -= (fit.lr * scale) * (X.transpose() * tl.grad);
    const double loss = full_loss(w);
    check_finite(loss, step + 1);
    if (loss < best_loss) {
      best_loss = loss;
      best_w = w;
    }
  }

  result.final_full_loss = best_loss;
  result.weights = std::move(best_w);
  result.embeddings = EmbeddingMatrix(X * result.weights);
  return result;
}

}  // namespace superpart
