#pragma once

#include <cstdint>
#include <numeric>
#include <random>
#include <unordered_set>

#include "mirror/reduce/knn.hpp"

namespace mirror::reduce {

/// Random-projection forest. Off by default; intended only for datasets
/// far beyond the brute-force sweet spot, and validated by recall tests
/// against knn_graph.
struct ApproximateKnnOptions {
  bool enabled = false;
  Index min_points = 50'000;  // below this the exact graph is always used
  int trees = 8;
  Index leaf_size = 128;
  int refinement_rounds = 4;  // neighbour-of-neighbour passes after the forest; stops early when stable
  std::uint64_t seed = 7;
};

namespace detail {

inline void split_leaves(const RowMatrix<double>& rows, std::vector<Index>& ids, std::size_t begin, std::size_t end,
                         Index leaf_size, std::mt19937_64& rng, std::vector<std::vector<Index>>& leaves) {
  const std::size_t count = end - begin;
  if (count <= static_cast<std::size_t>(leaf_size)) {
    leaves.emplace_back(ids.begin() + begin, ids.begin() + end);
    return;
  }
  // Hyperplane equidistant from two random members.
  const Index a = ids[begin + rng() % count];
  Index b = ids[begin + rng() % count];
  for (int tries = 0; b == a && tries < 8; ++tries) b = ids[begin + rng() % count];
  const Eigen::RowVectorXd normal = rows.row(a) - rows.row(b);
  const double offset = normal.dot(0.5 * (rows.row(a) + rows.row(b)));

  auto mid = std::partition(ids.begin() + begin, ids.begin() + end,
                            [&](Index i) { return rows.row(i).dot(normal) < offset; });
  std::size_t split = static_cast<std::size_t>(mid - ids.begin());
  if (split == begin || split == end) split = begin + count / 2;  // degenerate plane
  split_leaves(rows, ids, begin, split, leaf_size, rng, leaves);
  split_leaves(rows, ids, split, end, leaf_size, rng, leaves);
}

}  // namespace detail

/// Approximate k-NN graph: candidates are the union of the point's leaves
/// across the forest, refined with neighbours of neighbours.
template <typename Derived>
KnnGraph approximate_knn_graph(const Eigen::MatrixBase<Derived>& vectors, Index k, Metric metric,
                               const ApproximateKnnOptions& options = {}) {
  if (vectors.rows() < 1) throw Error(ErrorCode::InvalidArgument, "knn_graph needs at least one vector");
  if (k < 1) throw Error(ErrorCode::InvalidArgument, "knn_graph needs k >= 1");
  const RowMatrix<double> rows = detail::prepare_rows(vectors, metric);
  const Index n = rows.rows();

  KnnGraph g;
  g.n = n;
  g.k = k;
  g.row_size = std::min<Index>(k, n - 1);
  g.entries.assign(static_cast<std::size_t>(n * g.row_size), Neighbor{});

  auto pair_distance = [&](Index i, Index j) {
    if (metric == Metric::Cosine) return std::max(0.0, 1.0 - rows.row(i).dot(rows.row(j)));
    return (rows.row(i) - rows.row(j)).norm();
  };

  std::vector<std::unordered_set<Index>> candidates(static_cast<std::size_t>(n));
  std::mt19937_64 rng(options.seed);
  for (int t = 0; t < options.trees; ++t) {
    std::vector<Index> ids(static_cast<std::size_t>(n));
    std::iota(ids.begin(), ids.end(), Index{0});
    std::vector<std::vector<Index>> leaves;
    detail::split_leaves(rows, ids, 0, ids.size(), std::max<Index>(options.leaf_size, k + 1), rng, leaves);
    for (const auto& leaf : leaves)
      for (Index i : leaf)
        for (Index j : leaf)
          if (i != j) candidates[static_cast<std::size_t>(i)].insert(j);
  }

  detail::TopK top(static_cast<std::size_t>(g.row_size));
  auto rebuild_rows = [&] {
    for (Index i = 0; i < n; ++i) {
      std::vector<Index> sorted(candidates[static_cast<std::size_t>(i)].begin(),
                                candidates[static_cast<std::size_t>(i)].end());
      std::sort(sorted.begin(), sorted.end());
      for (Index j : sorted) top.offer(j, pair_distance(i, j));
      auto row = g.row(i);
      const std::size_t filled = top.size();
      top.drain_sorted(row);
      // Fewer candidates than k can only happen for tiny leaves; pad by scan.
      if (filled < row.size()) {
        for (Index j = 0; j < n; ++j)
          if (j != i) top.offer(j, pair_distance(i, j));
        top.drain_sorted(row);
      }
    }
  };
  rebuild_rows();

  // Forward and reverse neighbours of every neighbour join the candidates.
  for (int round = 0; round < options.refinement_rounds; ++round) {
    std::vector<std::vector<Index>> reverse(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i)
      for (const auto& nb : g.row(i)) reverse[static_cast<std::size_t>(nb.index)].push_back(i);
    std::size_t added = 0;
    auto add = [&](Index i, Index j) {
      if (j != i) added += candidates[static_cast<std::size_t>(i)].insert(j).second;
    };
    for (Index i = 0; i < n; ++i) {
      std::vector<Index> near;
      for (const auto& nb : g.row(i)) near.push_back(nb.index);
      near.insert(near.end(), reverse[static_cast<std::size_t>(i)].begin(), reverse[static_cast<std::size_t>(i)].end());
      for (Index j : near) {
        add(i, j);
        for (const auto& nb2 : g.row(j)) add(i, nb2.index);
        for (Index r : reverse[static_cast<std::size_t>(j)]) add(i, r);
      }
    }
    if (added == 0) break;
    rebuild_rows();
  }
  return g;
}

/// knn_graph, or the forest when enabled and the input is large enough.
template <typename Derived>
KnnGraph build_knn(const Eigen::MatrixBase<Derived>& vectors, Index k, Metric metric,
                   const ApproximateKnnOptions& options) {
  if (options.enabled && vectors.rows() >= options.min_points)
    return approximate_knn_graph(vectors, k, metric, options);
  return knn_graph(vectors, k, metric);
}

/// Fraction of exact neighbours recovered by `approx`, by index.
inline double recall(const KnnGraph& exact, const KnnGraph& approx) {
  std::size_t hit = 0, total = 0;
  for (Index i = 0; i < exact.n; ++i) {
    for (const auto& e : exact.row(i)) {
      ++total;
      for (const auto& a : approx.row(i))
        if (a.index == e.index) {
          ++hit;
          break;
        }
    }
  }
  return total == 0 ? 1.0 : static_cast<double>(hit) / static_cast<double>(total);
}

}  // namespace mirror::reduce
