#pragma once

#include <cstring>
#include <string>
#include <unordered_map>

#include "mirror/core/hash.hpp"
#include "mirror/reduce/approximate_knn.hpp"
#include "mirror/reduce/layout.hpp"

namespace mirror::reduce {

struct ReducerParams {
  Index k = 15;
  Metric metric = Metric::Cosine;
  LayoutParams layout;
  ApproximateKnnOptions approximate;
  /// Optional SGD refinement applied to transformed points; 0 keeps the
  /// pure neighbour-average projection.
  int transform_epochs = 0;
};

/// Fitted reduction state. Rows of `training` map to rows of `positions`.
/// Training rows that coincide under the metric share one graph vertex
/// (`vertex_of`), so they always land on the same position.
template <typename Scalar>
struct ReducerModel {
  RowMatrix<Scalar> training;
  std::vector<Index> vertex_of;   // training row -> graph vertex
  std::vector<Index> vertex_row;  // graph vertex -> first training row
  KnnGraph knn;
  FuzzyGraph fuzzy;
  Layout positions;
  ReducerParams params;
  CurveParams curve;
  std::string provider_id;

  Index size() const { return training.rows(); }
  Index dim() const { return training.cols(); }
};

/// Distances below this count as an exact match in transform.
inline constexpr double kExactMatchDistance = 1e-12;

namespace detail {

/// Groups rows that are bit-identical after metric preparation.
inline void collapse_duplicates(const RowMatrix<double>& prepared, std::vector<Index>& vertex_of,
                                std::vector<Index>& vertex_row) {
  const Index n = prepared.rows();
  const auto bytes = static_cast<std::size_t>(prepared.cols()) * sizeof(double);
  std::unordered_map<std::uint64_t, std::vector<Index>> buckets;
  vertex_of.assign(static_cast<std::size_t>(n), 0);
  vertex_row.clear();
  for (Index i = 0; i < n; ++i) {
    const auto* data = reinterpret_cast<const char*>(prepared.row(i).data());
    auto& bucket = buckets[fnv1a64(std::string_view(data, bytes))];
    Index vertex = -1;
    for (Index candidate : bucket) {
      if (std::memcmp(prepared.row(vertex_row[static_cast<std::size_t>(candidate)]).data(), data, bytes) == 0) {
        vertex = candidate;
        break;
      }
    }
    if (vertex < 0) {
      vertex = static_cast<Index>(vertex_row.size());
      vertex_row.push_back(i);
      bucket.push_back(vertex);
    }
    vertex_of[static_cast<std::size_t>(i)] = vertex;
  }
}

}  // namespace detail

/// Full fit: exact (or, when enabled and large, approximate) k-NN graph,
/// fuzzy simplicial set, PCA initialisation and layout optimisation.
/// Throws EmptyModel for zero rows.
template <typename Derived>
ReducerModel<typename Derived::Scalar> fit(const Eigen::MatrixBase<Derived>& vectors, const ReducerParams& params,
                                           std::string provider_id = {}) {
  using Scalar = typename Derived::Scalar;
  if (vectors.rows() == 0) throw Error(ErrorCode::EmptyModel, "cannot fit a reducer on zero vectors");
  if (params.k < 1) throw Error(ErrorCode::InvalidArgument, "k must be >= 1");

  ReducerModel<Scalar> model;
  model.training = vectors;
  model.params = params;
  model.provider_id = std::move(provider_id);
  model.curve = fit_curve(params.layout.min_dist, params.layout.spread);

  const RowMatrix<double> prepared = detail::prepare_rows(model.training, params.metric);
  detail::collapse_duplicates(prepared, model.vertex_of, model.vertex_row);
  const auto vertices = static_cast<Index>(model.vertex_row.size());

  RowMatrix<Scalar> unique(vertices, model.training.cols());
  for (Index v = 0; v < vertices; ++v) unique.row(v) = model.training.row(model.vertex_row[static_cast<std::size_t>(v)]);

  Layout vertex_positions = Layout::Zero(vertices, 2);
  if (vertices >= 2) {
    model.knn = build_knn(unique, params.k, params.metric, params.approximate);
    model.fuzzy = fuzzy_simplicial_set(model.knn, params.k);
    vertex_positions = optimize_layout(model.fuzzy, pca_initialize(unique), params.layout, model.curve);
  } else {
    model.knn = KnnGraph{vertices, params.k, 0, {}};
    model.fuzzy.n = vertices;
  }

  model.positions.resize(model.training.rows(), 2);
  for (Index i = 0; i < model.training.rows(); ++i)
    model.positions.row(i) = vertex_positions.row(model.vertex_of[static_cast<std::size_t>(i)]);
  if (!model.positions.allFinite()) throw Error(ErrorCode::InvalidArgument, "layout diverged to non-finite values");
  return model;
}

namespace detail {

/// Pull each projected point towards its neighbours' fixed positions and
/// away from random training points; training positions never move.
inline void refine_projection(Layout& projected, const std::vector<std::vector<Neighbor>>& neighbors,
                              const Layout& reference, const CurveParams& curve, const LayoutParams& params,
                              int epochs) {
  std::mt19937_64 rng(params.seed ^ 0x7f4a7c15ULL);
  const double a = curve.a, b = curve.b;
  const Index n_ref = reference.rows();
  for (int epoch = 0; epoch < epochs; ++epoch) {
    const double alpha = 0.25 * params.learning_rate * (1.0 - static_cast<double>(epoch) / epochs);
    for (Index q = 0; q < projected.rows(); ++q) {
      for (const auto& nb : neighbors[static_cast<std::size_t>(q)]) {
        const double dx = projected(q, 0) - reference(nb.index, 0);
        const double dy = projected(q, 1) - reference(nb.index, 1);
        const double d2 = dx * dx + dy * dy;
        if (d2 > 0.0) {
          const double coeff = -2.0 * a * b * std::pow(d2, b - 1.0) / (a * std::pow(d2, b) + 1.0);
          projected(q, 0) += clip_gradient(coeff * dx) * alpha;
          projected(q, 1) += clip_gradient(coeff * dy) * alpha;
        }
        for (int p = 0; p < params.negative_sample_rate; ++p) {
          const Index k = draw_index(rng, n_ref);
          const double nx = projected(q, 0) - reference(k, 0), ny = projected(q, 1) - reference(k, 1);
          const double nd2 = nx * nx + ny * ny;
          if (!(nd2 > 0.0)) continue;
          const double coeff = 2.0 * b / ((0.001 + nd2) * (a * std::pow(nd2, b) + 1.0));
          projected(q, 0) += clip_gradient(coeff * nx) * alpha;
          projected(q, 1) += clip_gradient(coeff * ny) * alpha;
        }
      }
    }
  }
}

}  // namespace detail

/// Places new vectors in a fitted layout: the inverse-distance weighted
/// mean of the positions of their k nearest training vectors, or exactly a
/// training position when the distance to it is zero. Pure; the model is
/// not modified. Throws EmptyModel or DimensionMismatch.
template <typename Scalar, typename Derived>
Layout transform(const ReducerModel<Scalar>& model, const Eigen::MatrixBase<Derived>& new_vectors) {
  if (model.size() == 0) throw Error(ErrorCode::EmptyModel, "reducer model has no training vectors");
  if (new_vectors.rows() > 0 && new_vectors.cols() != model.dim())
    throw Error(ErrorCode::DimensionMismatch, "vectors have dimension " + std::to_string(new_vectors.cols()) +
                                                  ", model expects " + std::to_string(model.dim()));

  const Metric metric = model.params.metric;
  const RowMatrix<double> refs = detail::prepare_rows(model.training, metric);
  const RowMatrix<double> queries = detail::prepare_rows(new_vectors, metric);
  const Index k = std::min<Index>(model.params.k, refs.rows());

  std::vector<Neighbor> entries;
  detail::brute_force_neighbors(queries, refs, k, metric, false, entries);

  Layout out(queries.rows(), 2);
  std::vector<std::vector<Neighbor>> refine_sets;
  std::vector<Index> refine_rows;
  for (Index q = 0; q < queries.rows(); ++q) {
    const std::span<const Neighbor> row(entries.data() + q * k, static_cast<std::size_t>(k));
    if (row.front().distance <= kExactMatchDistance) {
      out.row(q) = model.positions.row(row.front().index);
      continue;
    }
    double total = 0.0;
    Eigen::RowVector2d acc = Eigen::RowVector2d::Zero();
    for (const auto& nb : row) {
      const double w = 1.0 / nb.distance;
      acc += w * model.positions.row(nb.index);
      total += w;
    }
    out.row(q) = acc / total;
    if (model.params.transform_epochs > 0) {
      refine_sets.emplace_back(row.begin(), row.end());
      refine_rows.push_back(q);
    }
  }

  if (!refine_rows.empty()) {
    Layout subset(static_cast<Index>(refine_rows.size()), 2);
    for (std::size_t r = 0; r < refine_rows.size(); ++r) subset.row(static_cast<Index>(r)) = out.row(refine_rows[r]);
    detail::refine_projection(subset, refine_sets, model.positions, model.curve, model.params.layout,
                              model.params.transform_epochs);
    for (std::size_t r = 0; r < refine_rows.size(); ++r) out.row(refine_rows[r]) = subset.row(static_cast<Index>(r));
  }
  return out;
}

}  // namespace mirror::reduce
