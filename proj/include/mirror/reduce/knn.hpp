#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "mirror/core/error.hpp"
#include "mirror/embed/embedding.hpp"

namespace mirror::reduce {

using Index = Eigen::Index;

enum class Metric { Cosine, Euclidean };

inline std::string_view to_string(Metric m) { return m == Metric::Cosine ? "cosine" : "euclidean"; }

inline Metric metric_from_string(std::string_view s) {
  if (s == "cosine") return Metric::Cosine;
  if (s == "euclidean") return Metric::Euclidean;
  throw Error(ErrorCode::InvalidArgument, "unknown metric '" + std::string(s) + "'");
}

struct Neighbor {
  Index index = 0;
  double distance = 0.0;
  bool operator==(const Neighbor&) const = default;
};

/// Ascending (distance, index); the index breaks ties so results do not
/// depend on scan order.
inline bool closer(const Neighbor& a, const Neighbor& b) {
  return a.distance < b.distance || (a.distance == b.distance && a.index < b.index);
}

/// k nearest neighbours per point, self excluded. Rows hold
/// min(k, n - 1) entries sorted by `closer`.
struct KnnGraph {
  Index n = 0;
  Index k = 0;
  Index row_size = 0;
  std::vector<Neighbor> entries;  // n * row_size, row-major

  std::span<const Neighbor> row(Index i) const {
    return {entries.data() + i * row_size, static_cast<std::size_t>(row_size)};
  }
  std::span<Neighbor> row(Index i) {
    return {entries.data() + i * row_size, static_cast<std::size_t>(row_size)};
  }
};

namespace detail {

inline constexpr Index kQueryBlock = 64;

/// Bounded max-heap keeping the `capacity` closest neighbours seen so far.
class TopK {
 public:
  explicit TopK(std::size_t capacity) : capacity_(capacity) { heap_.reserve(capacity + 1); }

  void offer(Index index, double distance) {
    const Neighbor cand{index, distance};
    if (heap_.size() < capacity_) {
      heap_.push_back(cand);
      std::push_heap(heap_.begin(), heap_.end(), closer);
    } else if (capacity_ > 0 && closer(cand, heap_.front())) {
      std::pop_heap(heap_.begin(), heap_.end(), closer);
      heap_.back() = cand;
      std::push_heap(heap_.begin(), heap_.end(), closer);
    }
  }

  void reset() { heap_.clear(); }

  void drain_sorted(std::span<Neighbor> out) {
    std::sort_heap(heap_.begin(), heap_.end(), closer);
    std::copy(heap_.begin(), heap_.end(), out.begin());
    heap_.clear();
  }

  std::size_t size() const { return heap_.size(); }

 private:
  std::size_t capacity_;
  std::vector<Neighbor> heap_;
};

/// Rows rescaled to unit length (zero rows stay zero) for cosine; a plain
/// double copy otherwise.
template <typename Derived>
RowMatrix<double> prepare_rows(const Eigen::MatrixBase<Derived>& data, Metric metric) {
  RowMatrix<double> out = data.template cast<double>();
  if (metric == Metric::Cosine) {
    for (Index i = 0; i < out.rows(); ++i) {
      const double norm = out.row(i).norm();
      if (norm > 0.0) out.row(i) /= norm;
    }
  }
  return out;
}

/// Distances from a block of prepared query rows to every prepared
/// reference row. Cosine: 1 - <q, r>. Euclidean: |q - r|.
inline void block_distances(const RowMatrix<double>& queries, Index q0, Index count,
                            const RowMatrix<double>& refs, Metric metric, RowMatrix<double>& out) {
  if (metric == Metric::Cosine) {
    out.noalias() = queries.middleRows(q0, count) * refs.transpose();
    out = (1.0 - out.array()).max(0.0).matrix();
  } else {
    out.resize(count, refs.rows());
    for (Index q = 0; q < count; ++q)
      out.row(q) = (refs.rowwise() - queries.row(q0 + q)).rowwise().norm().transpose();
  }
}

/// Exact k-NN of each prepared query against prepared references. When
/// `exclude_self` is set, query i never reports reference i.
inline void brute_force_neighbors(const RowMatrix<double>& queries, const RowMatrix<double>& refs, Index row_size,
                                  Metric metric, bool exclude_self, std::vector<Neighbor>& entries) {
  entries.assign(static_cast<std::size_t>(queries.rows() * row_size), Neighbor{});
  RowMatrix<double> dist;
  TopK top(static_cast<std::size_t>(row_size));
  for (Index q0 = 0; q0 < queries.rows(); q0 += kQueryBlock) {
    const Index count = std::min(kQueryBlock, queries.rows() - q0);
    block_distances(queries, q0, count, refs, metric, dist);
    for (Index q = 0; q < count; ++q) {
      const Index qi = q0 + q;
      const double* d = dist.row(q).data();
      for (Index j = 0; j < refs.rows(); ++j) {
        if (exclude_self && j == qi) continue;
        top.offer(j, d[j]);
      }
      top.drain_sorted({entries.data() + qi * row_size, static_cast<std::size_t>(row_size)});
    }
  }
}

}  // namespace detail

/// Exact k-nearest-neighbour graph by brute force over all pairs.
/// Throws InvalidArgument for k < 1 or an empty input.
template <typename Derived>
KnnGraph knn_graph(const Eigen::MatrixBase<Derived>& vectors, Index k, Metric metric = Metric::Cosine) {
  if (vectors.rows() < 1) throw Error(ErrorCode::InvalidArgument, "knn_graph needs at least one vector");
  if (k < 1) throw Error(ErrorCode::InvalidArgument, "knn_graph needs k >= 1");
  KnnGraph g;
  g.n = vectors.rows();
  g.k = k;
  g.row_size = std::min<Index>(k, g.n - 1);
  const RowMatrix<double> rows = detail::prepare_rows(vectors, metric);
  detail::brute_force_neighbors(rows, rows, g.row_size, metric, true, g.entries);
  return g;
}

/// Overload checking a list of separately-held vectors for a common length.
inline KnnGraph knn_graph(std::span<const embed::EmbeddingVector> vectors, Index k, Metric metric = Metric::Cosine) {
  if (vectors.empty()) throw Error(ErrorCode::InvalidArgument, "knn_graph needs at least one vector");
  const Index dim = vectors.front().size();
  RowMatrix<float> m(static_cast<Index>(vectors.size()), dim);
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    if (vectors[i].size() != dim)
      throw Error(ErrorCode::DimensionMismatch, "vector " + std::to_string(i) + " has dimension " +
                                                    std::to_string(vectors[i].size()) + ", expected " +
                                                    std::to_string(dim));
    m.row(static_cast<Index>(i)) = vectors[i].transpose();
  }
  return knn_graph(m, k, metric);
}

/// Distance between two raw vectors under `metric`, matching knn_graph.
template <typename A, typename B>
double distance(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b, Metric metric) {
  const auto ad = a.template cast<double>();
  const auto bd = b.template cast<double>();
  if (metric == Metric::Euclidean) return (ad - bd).norm();
  const double na = ad.norm(), nb = bd.norm();
  if (na == 0.0 || nb == 0.0) return 1.0;
  return std::max(0.0, 1.0 - ad.dot(bd) / (na * nb));
}

}  // namespace mirror::reduce
