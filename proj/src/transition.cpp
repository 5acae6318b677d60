#include "superpart/transition.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace superpart {

void TransitionConfig::validate() const {
  if (!(tau > 0.0) || !std::isfinite(tau)) throw InvalidInputError("tau must be positive");
  if (!(rho_intra > 0.0 && rho_intra <= 1.0)) {
    throw InvalidInputError("rho_intra must lie in (0, 1]");
  }
}

namespace {

double distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

}  // namespace

double affinity(std::span<const double> f_p, std::span<const double> f_q, double tau) {
  if (f_p.size() != f_q.size()) throw InvalidInputError("affinity needs equal dimensions");
  return std::exp(-distance(f_p, f_q) / tau);
}

std::size_t intra_quota(std::size_t n_inter, double rho) {
  if (rho >= 1.0) return std::numeric_limits<std::size_t>::max();
  const double bound = rho * static_cast<double>(n_inter) / (1.0 - rho);
  // Relative slack absorbs rounding when the bound is an exact integer.
  return static_cast<std::size_t>(std::floor(bound * (1.0 + 1e-12)));
}

std::vector<TaggedEdge> sample_edges(std::span<const Edge> intra, std::span<const Edge> inter,
                                     const TransitionConfig& cfg) {
  cfg.validate();
  std::vector<TaggedEdge> out;
  const std::size_t keep =
      inter.empty() ? intra.size() : std::min(intra.size(), intra_quota(inter.size(), cfg.rho_intra));
  out.reserve(keep + inter.size());

  if (keep == intra.size()) {
    for (const Edge& e : intra) out.push_back({e.u, e.v, false});
  } else {
    std::vector<std::size_t> idx(intra.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::mt19937_64 rng(cfg.seed);
    for (std::size_t i = 0; i < keep; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
      std::swap(idx[i], idx[pick(rng)]);
    }
    std::sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(keep));
    for (std::size_t i = 0; i < keep; ++i) out.push_back({intra[idx[i]].u, intra[idx[i]].v, false});
  }
  for (const Edge& e : inter) out.push_back({e.u, e.v, true});
  return out;
}

std::vector<TaggedEdge> tag_all_edges(const EdgeSplit& split) {
  std::vector<TaggedEdge> out;
  out.reserve(split.intra.size() + split.inter.size());
  for (const Edge& e : split.intra) out.push_back({e.u, e.v, false});
  for (const Edge& e : split.inter) out.push_back({e.u, e.v, true});
  return out;
}

TransitionLoss transition_loss(const EmbeddingMatrix& F, std::span<const TaggedEdge> edges,
                               const TransitionConfig& cfg, bool with_gradient) {
  cfg.validate();
  const std::size_t n = F.rows();
  const std::size_t m = F.dim();
  const double tau = cfg.tau;
  for (const TaggedEdge& e : edges) {
    if (e.u >= n || e.v >= n) throw InvalidInputError("sampled edge references a missing row");
  }

  // Per edge: loss term and scalar c such that the gradient on f_u is
  // c * (f_u - f_v) and on f_v its negation.
  std::vector<double> edge_loss(edges.size());
  std::vector<double> coef(edges.size());
  std::size_t clamped = 0;
#pragma omp parallel for schedule(static) reduction(+ : clamped)
  for (std::ptrdiff_t ei = 0; ei < static_cast<std::ptrdiff_t>(edges.size()); ++ei) {
    const auto i = static_cast<std::size_t>(ei);
    const TaggedEdge& e = edges[i];
    const double r = distance(F.row(e.u), F.row(e.v));
    const double s = r / tau;
    if (!e.inter) {
      // -log a = r / tau; zero-length edges contribute nothing, gradient 0 by continuity.
      edge_loss[i] = s;
      coef[i] = r > 0.0 ? 1.0 / (tau * r) : 0.0;
    } else {
      const double a = std::exp(-s);
      if (a > 1.0 - kAffinityClampEps) {
        // Loss frozen at the clamp; its gradient is zero there.
        edge_loss[i] = -std::log(kAffinityClampEps);
        coef[i] = 0.0;
        ++clamped;
      } else {
        edge_loss[i] = -std::log(-std::expm1(-s));
        coef[i] = -(a / (1.0 - a)) / (tau * r);
      }
    }
  }

  TransitionLoss result;
  result.clamped_edges = clamped;
  result.loss = deterministic_sum(edge_loss.size(), [&](std::size_t i) { return edge_loss[i]; });
  if (!with_gradient) return result;

  // Gather per node over incident edges in edge order.
  std::vector<std::size_t> offsets(n + 1, 0);
  for (const TaggedEdge& e : edges) {
    ++offsets[e.u + 1];
    ++offsets[e.v + 1];
  }
  for (std::size_t i = 0; i < n; ++i) offsets[i + 1] += offsets[i];
  std::vector<std::pair<std::uint32_t, bool>> incident(offsets[n]);  // (edge, node is u)
  {
    std::vector<std::size_t> fill(offsets.begin(), offsets.end() - 1);
    for (std::size_t i = 0; i < edges.size(); ++i) {
      incident[fill[edges[i].u]++] = {static_cast<std::uint32_t>(i), true};
      incident[fill[edges[i].v]++] = {static_cast<std::uint32_t>(i), false};
    }
  }

  result.grad = RowMatrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t pi = 0; pi < static_cast<std::ptrdiff_t>(n); ++pi) {
    const auto p = static_cast<std::size_t>(pi);
    double* g = result.grad.data() + p * m;
    for (std::size_t k = offsets[p]; k < offsets[p + 1]; ++k) {
      const auto [ei, is_u] = incident[k];
      const double c = coef[ei];
      if (c == 0.0) continue;
      const auto fu = F.row(edges[ei].u);
      const auto fv = F.row(edges[ei].v);
      const double sign = is_u ? c : -c;
      for (std::size_t j = 0; j < m; ++j) g[j] += sign * (fu[j] - fv[j]);
    }
  }
  return result;
}

}  // namespace superpart
