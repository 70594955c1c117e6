#pragma once

#include <cmath>
#include <limits>
#include <algorithm>
#include <vector>

#include "mirror/reduce/knn.hpp"

namespace mirror::reduce {

struct FuzzyEdge {
  Index source = 0;  // source < target
  Index target = 0;
  double weight = 0.0;
  bool operator==(const FuzzyEdge&) const = default;
};

/// Symmetric fuzzy neighbour graph. Each undirected edge is stored once
/// with source < target and weight in (0, 1].
struct FuzzyGraph {
  Index n = 0;
  std::vector<FuzzyEdge> edges;  // sorted by (source, target)
  std::vector<double> rho;       // distance to nearest neighbour
  std::vector<double> sigma;     // bandwidth
  std::vector<double> residual;  // |sum_j exp(-(d_ij - rho_i)/sigma_i) - log2(k)|
  double target = 0.0;           // log2(k) actually used

  /// Weight of the undirected edge {i, j}, 0 when absent.
  double weight(Index i, Index j) const;
};

inline constexpr int kSigmaIterations = 64;
inline constexpr double kSigmaTolerance = 1e-5;

/// a + b - a*b.
inline double fuzzy_union(double a, double b) { return a + b - a * b; }

struct Bandwidth {
  double rho = 0.0;
  double sigma = 1.0;
  double residual = 0.0;
};

/// Binary search for sigma so that sum_j exp(-max(0, d_j - rho)/sigma)
/// equals `target`. `row` ascends. When the target is unreachable
/// (every distance equals rho) sigma stays at its last bracket and the
/// residual reports the gap.
inline Bandwidth smooth_distances(std::span<const Neighbor> row, double target) {
  Bandwidth out;
  if (row.empty()) return out;
  out.rho = row.front().distance;

  auto mass = [&](double sigma) {
    double sum = 0.0;
    for (const auto& nb : row) sum += std::exp(-std::max(0.0, nb.distance - out.rho) / sigma);
    return sum;
  };

  double lo = 0.0;
  double hi = std::numeric_limits<double>::infinity();
  double mid = 1.0;
  double sum = mass(mid);
  for (int iter = 0; iter < kSigmaIterations; ++iter) {
    if (std::abs(sum - target) < kSigmaTolerance) break;
    if (sum > target) {
      hi = mid;
      mid = 0.5 * (lo + hi);
    } else {
      lo = mid;
      mid = std::isinf(hi) ? mid * 2.0 : 0.5 * (lo + hi);
    }
    sum = mass(mid);
  }
  out.sigma = mid;
  out.residual = std::abs(sum - target);
  return out;
}

/// Fuzzy simplicial set of a k-NN graph: per-point rho and sigma, directed
/// membership exp(-max(0, d - rho)/sigma), then fuzzy union across the two
/// directions. Throws DegenerateGraph for fewer than two points.
inline FuzzyGraph fuzzy_simplicial_set(const KnnGraph& graph, Index k) {
  if (graph.n < 2) throw Error(ErrorCode::DegenerateGraph, "fuzzy graph needs at least two points");
  if (k < 1) throw Error(ErrorCode::InvalidArgument, "fuzzy graph needs k >= 1");

  FuzzyGraph fg;
  fg.n = graph.n;
  const Index effective_k = std::min(k, graph.row_size);
  fg.target = std::log2(static_cast<double>(effective_k));
  fg.rho.resize(static_cast<std::size_t>(graph.n));
  fg.sigma.resize(static_cast<std::size_t>(graph.n));
  fg.residual.resize(static_cast<std::size_t>(graph.n));

  struct Directed {
    Index lo, hi;
    double forward, backward;  // lo -> hi, hi -> lo
  };
  std::vector<Directed> directed;
  directed.reserve(static_cast<std::size_t>(graph.n * effective_k));
  for (Index i = 0; i < graph.n; ++i) {
    const auto row = graph.row(i).first(static_cast<std::size_t>(effective_k));
    const Bandwidth bw = smooth_distances(row, fg.target);
    fg.rho[static_cast<std::size_t>(i)] = bw.rho;
    fg.sigma[static_cast<std::size_t>(i)] = bw.sigma;
    fg.residual[static_cast<std::size_t>(i)] = bw.residual;
    for (const auto& nb : row) {
      const double w = std::exp(-std::max(0.0, nb.distance - bw.rho) / bw.sigma);
      if (!(w > 0.0)) continue;
      if (i < nb.index)
        directed.push_back({i, nb.index, w, 0.0});
      else
        directed.push_back({nb.index, i, 0.0, w});
    }
  }
  std::sort(directed.begin(), directed.end(),
            [](const Directed& a, const Directed& b) { return a.lo < b.lo || (a.lo == b.lo && a.hi < b.hi); });

  fg.edges.reserve(directed.size());
  for (std::size_t s = 0; s < directed.size();) {
    double forward = 0.0, backward = 0.0;
    std::size_t e = s;
    for (; e < directed.size() && directed[e].lo == directed[s].lo && directed[e].hi == directed[s].hi; ++e) {
      forward = std::max(forward, directed[e].forward);
      backward = std::max(backward, directed[e].backward);
    }
    const double sym = std::min(1.0, fuzzy_union(forward, backward));
    if (sym > 0.0) fg.edges.push_back({directed[s].lo, directed[s].hi, sym});
    s = e;
  }
  return fg;
}

inline double FuzzyGraph::weight(Index i, Index j) const {
  if (i == j) return 0.0;
  const FuzzyEdge probe{std::min(i, j), std::max(i, j), 0.0};
  auto it = std::lower_bound(edges.begin(), edges.end(), probe, [](const FuzzyEdge& a, const FuzzyEdge& b) {
    return a.source < b.source || (a.source == b.source && a.target < b.target);
  });
  if (it == edges.end() || it->source != probe.source || it->target != probe.target) return 0.0;
  return it->weight;
}

}  // namespace mirror::reduce
