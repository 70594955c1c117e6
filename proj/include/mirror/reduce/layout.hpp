#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Dense>

#include "mirror/reduce/curve.hpp"
#include "mirror/reduce/fuzzy.hpp"

namespace mirror::reduce {

/// n x 2 positions in layout units.
using Layout = Eigen::Matrix<double, Eigen::Dynamic, 2, Eigen::RowMajor>;

struct LayoutParams {
  int epochs = 200;
  double min_dist = 0.1;
  double spread = 1.0;
  int negative_sample_rate = 5;
  double learning_rate = 1.0;
  double repulsion_strength = 1.0;
  std::uint64_t seed = 42;
};

inline constexpr double kInitExtent = 10.0;

/// Projection onto the top two principal axes, centered and scaled so the
/// largest absolute coordinate is kInitExtent. Each axis is sign-fixed so
/// its largest-magnitude loading is positive. Constant data maps to the
/// origin.
template <typename Derived>
Layout pca_initialize(const Eigen::MatrixBase<Derived>& data) {
  const Index n = data.rows();
  Layout out = Layout::Zero(n, 2);
  if (n == 0) return out;

  const Eigen::MatrixXd x = data.template cast<double>();
  const Eigen::RowVectorXd mean = x.colwise().mean();
  const Eigen::MatrixXd centered = x.rowwise() - mean;
  if (n < 2 || centered.cwiseAbs().maxCoeff() == 0.0) return out;

  const Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(n - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  const Index d = cov.rows();
  for (Index c = 0; c < std::min<Index>(2, d); ++c) {
    Eigen::VectorXd axis = solver.eigenvectors().col(d - 1 - c);  // eigenvalues ascend
    Index arg = 0;
    axis.cwiseAbs().maxCoeff(&arg);
    if (axis[arg] < 0.0) axis = -axis;
    out.col(c) = centered * axis;
  }
  const double extent = out.cwiseAbs().maxCoeff();
  if (extent > 0.0) out *= kInitExtent / extent;
  return out;
}

namespace detail {

inline double clip_gradient(double g) { return std::clamp(g, -4.0, 4.0); }

/// Uniform draw in [0, n). Deterministic across standard libraries, unlike
/// std::uniform_int_distribution.
inline Index draw_index(std::mt19937_64& rng, Index n) {
  return static_cast<Index>(rng() % static_cast<std::uint64_t>(n));
}

}  // namespace detail

/// Stochastic layout optimisation of a fuzzy graph starting from `init`.
/// Edges are sampled at a rate proportional to their weight (an edge of
/// weight w is visited every w_max / w epochs), each visit pulling both
/// endpoints together and pushing the head away from
/// `negative_sample_rate` uniformly drawn points. The learning rate decays
/// linearly to zero. One seeded generator drives all sampling in a fixed
/// order, so identical inputs give bit-identical output.
inline Layout optimize_layout(const FuzzyGraph& graph, Layout init, const LayoutParams& params,
                              const CurveParams& curve) {
  if (params.epochs < 0 || params.negative_sample_rate < 0)
    throw Error(ErrorCode::InvalidArgument, "epochs and negative sample rate must be non-negative");
  if (init.rows() != graph.n) throw Error(ErrorCode::InvalidArgument, "initial layout does not match graph size");

  Layout y = std::move(init);
  if (graph.edges.empty() || params.epochs == 0) return y;

  struct Directed {
    Index head, tail;
    double weight;
  };
  std::vector<Directed> edges;
  edges.reserve(graph.edges.size() * 2);
  double max_weight = 0.0;
  for (const auto& e : graph.edges) max_weight = std::max(max_weight, e.weight);
  const double floor_weight = max_weight / static_cast<double>(params.epochs);
  for (const auto& e : graph.edges) {
    if (e.weight < floor_weight) continue;
    edges.push_back({e.source, e.target, e.weight});
    edges.push_back({e.target, e.source, e.weight});
  }
  std::sort(edges.begin(), edges.end(), [](const Directed& a, const Directed& b) {
    return a.head < b.head || (a.head == b.head && a.tail < b.tail);
  });

  const std::size_t m = edges.size();
  std::vector<double> epochs_per_sample(m), next_sample(m), epochs_per_negative(m), next_negative(m);
  for (std::size_t e = 0; e < m; ++e) {
    epochs_per_sample[e] = max_weight / edges[e].weight;
    next_sample[e] = epochs_per_sample[e];
    epochs_per_negative[e] =
        params.negative_sample_rate > 0 ? epochs_per_sample[e] / params.negative_sample_rate : 0.0;
    next_negative[e] = epochs_per_negative[e];
  }

  const double a = curve.a, b = curve.b;
  const Index n = y.rows();
  std::mt19937_64 rng(params.seed);
  double alpha = params.learning_rate;

  for (int epoch = 0; epoch < params.epochs; ++epoch) {
    const double now = static_cast<double>(epoch);
    for (std::size_t e = 0; e < m; ++e) {
      if (next_sample[e] > now) continue;
      const Index i = edges[e].head, j = edges[e].tail;

      const double dx = y(i, 0) - y(j, 0), dy = y(i, 1) - y(j, 1);
      const double d2 = dx * dx + dy * dy;
      if (d2 > 0.0) {
        const double coeff = -2.0 * a * b * std::pow(d2, b - 1.0) / (a * std::pow(d2, b) + 1.0);
        const double gx = detail::clip_gradient(coeff * dx) * alpha;
        const double gy = detail::clip_gradient(coeff * dy) * alpha;
        y(i, 0) += gx;
        y(i, 1) += gy;
        y(j, 0) -= gx;
        y(j, 1) -= gy;
      }
      next_sample[e] += epochs_per_sample[e];

      if (params.negative_sample_rate == 0) continue;
      const int negatives = std::max(0, static_cast<int>((now - next_negative[e]) / epochs_per_negative[e]));
      for (int p = 0; p < negatives; ++p) {
        const Index k = detail::draw_index(rng, n);
        if (k == i) continue;
        const double nx = y(i, 0) - y(k, 0), ny = y(i, 1) - y(k, 1);
        const double nd2 = nx * nx + ny * ny;
        if (!(nd2 > 0.0)) continue;
        const double coeff =
            2.0 * params.repulsion_strength * b / ((0.001 + nd2) * (a * std::pow(nd2, b) + 1.0));
        y(i, 0) += detail::clip_gradient(coeff * nx) * alpha;
        y(i, 1) += detail::clip_gradient(coeff * ny) * alpha;
      }
      next_negative[e] += negatives * epochs_per_negative[e];
    }
    alpha = params.learning_rate * (1.0 - static_cast<double>(epoch + 1) / params.epochs);
  }
  return y;
}

}  // namespace mirror::reduce
