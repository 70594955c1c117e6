#include <doctest.h>

#include <cmath>

#include "mirror/core/error.hpp"
#include "mirror/reduce/approximate_knn.hpp"
#include "mirror/reduce/curve.hpp"
#include "mirror/reduce/fuzzy.hpp"
#include "mirror/reduce/reducer.hpp"
#include "mirror/store/binary_io.hpp"
#include "support.hpp"

using namespace mirror;
using namespace mirror::reduce;

namespace {

void check_against_oracle(const RowMatrix<double>& x, Index k, Metric metric) {
  const auto g = knn_graph(x, k, metric);
  const auto oracle = test::brute_knn(x, k, metric);
  REQUIRE(g.n == x.rows());
  for (Index i = 0; i < g.n; ++i) {
    const auto row = g.row(i);
    const auto& want = oracle[static_cast<std::size_t>(i)];
    REQUIRE(row.size() == want.size());
    for (std::size_t j = 0; j < row.size(); ++j) {
      CHECK(row[j].index == want[j].index);
      CHECK(row[j].distance == doctest::Approx(want[j].distance).epsilon(1e-9));
    }
  }
}

std::string layout_hash(const Layout& y) {
  return store::sha256_hex(
      std::string_view(reinterpret_cast<const char*>(y.data()), static_cast<std::size_t>(y.size()) * sizeof(double)));
}

ReducerParams quick(std::uint64_t seed = 1) {
  ReducerParams p;
  p.k = 10;
  p.layout.epochs = 100;
  p.layout.seed = seed;
  return p;
}

}  // namespace

TEST_SUITE("reduce") {

TEST_CASE("knn equals the brute-force oracle") {
  check_against_oracle(test::uniform_points(120, 8, 3), 7, Metric::Euclidean);
  check_against_oracle(test::uniform_points(150, 16, 4), 15, Metric::Cosine);
  check_against_oracle(test::uniform_points(5, 3, 5), 10, Metric::Euclidean);
}

TEST_CASE("knn rows are sorted, self-free and sized min(k, n-1)") {
  const auto x = test::uniform_points(30, 4, 6);
  const auto g = knn_graph(x, 40, Metric::Euclidean);
  CHECK(g.row_size == 29);
  for (Index i = 0; i < g.n; ++i) {
    const auto row = g.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) {
      CHECK(row[j].index != i);
      CHECK(row[j].distance >= 0.0);
      if (j > 0) CHECK(row[j - 1].distance <= row[j].distance);
    }
  }
  CHECK_THROWS_AS(knn_graph(x, 0, Metric::Euclidean), Error);
  CHECK_THROWS_AS(knn_graph(RowMatrix<double>(0, 4), 3, Metric::Euclidean), Error);
}

TEST_CASE("knn on separately held vectors checks their length") {
  std::vector<embed::EmbeddingVector> v{Eigen::VectorXf::Ones(4), Eigen::VectorXf::Ones(3)};
  CHECK_THROWS_AS(knn_graph(v, 1), Error);
}

TEST_CASE("approximate forest recovers the exact graph at small sizes") {
  const auto x = test::uniform_points(100, 64, 8);
  ApproximateKnnOptions opts;
  opts.enabled = true;
  opts.min_points = 0;
  const auto exact = knn_graph(x, 10, Metric::Cosine);
  CHECK(recall(exact, build_knn(x, 10, Metric::Cosine, opts)) == 1.0);
  opts.enabled = false;
  CHECK(recall(exact, build_knn(x, 10, Metric::Cosine, opts)) == 1.0);
}

TEST_CASE("approximate forest with small leaves") {
  const auto x = test::uniform_points(2000, 16, 12);
  ApproximateKnnOptions opts;
  opts.enabled = true;
  opts.min_points = 0;
  opts.leaf_size = 32;
  const auto exact = knn_graph(x, 15, Metric::Euclidean);
  const auto approx = build_knn(x, 15, Metric::Euclidean, opts);
  CHECK(recall(exact, approx) >= 0.99);
  for (Index i = 0; i < approx.n; ++i)
    for (const auto& nb : approx.row(i)) CHECK(nb.index != i);
}

TEST_CASE("sigma search meets the target for every point") {
  const auto x = test::uniform_points(300, 12, 9);
  const auto g = knn_graph(x, 15, Metric::Euclidean);
  const auto fg = fuzzy_simplicial_set(g, 15);
  CHECK(fg.target == doctest::Approx(std::log2(15.0)));
  for (Index i = 0; i < g.n; ++i) {
    double sum = 0;
    for (const auto& nb : g.row(i))
      sum += std::exp(-std::max(0.0, nb.distance - fg.rho[static_cast<std::size_t>(i)]) / fg.sigma[static_cast<std::size_t>(i)]);
    CHECK(std::abs(sum - fg.target) < 1e-4);
    CHECK(fg.sigma[static_cast<std::size_t>(i)] > 0.0);
    CHECK(fg.rho[static_cast<std::size_t>(i)] == g.row(i).front().distance);
  }
}

TEST_CASE("fuzzy edges are symmetric unions in (0, 1]") {
  const auto x = test::uniform_points(80, 6, 10);
  const auto g = knn_graph(x, 8, Metric::Euclidean);
  const auto fg = fuzzy_simplicial_set(g, 8);
  for (std::size_t e = 0; e < fg.edges.size(); ++e) {
    const auto& edge = fg.edges[e];
    CHECK(edge.source < edge.target);
    CHECK(edge.weight > 0.0);
    CHECK(edge.weight <= 1.0);
    CHECK(fg.weight(edge.target, edge.source) == edge.weight);
    if (e > 0) CHECK(std::make_pair(fg.edges[e - 1].source, fg.edges[e - 1].target) < std::make_pair(edge.source, edge.target));
  }
  CHECK(fuzzy_union(0.5, 0.5) == 0.75);
  CHECK(fuzzy_union(1.0, 0.0) == 1.0);
  CHECK_THROWS_AS(fuzzy_simplicial_set(knn_graph(test::uniform_points(1, 2, 1), 3, Metric::Euclidean), 3), Error);
}

TEST_CASE("curve parameters match the least-squares reference") {
  // tests/oracles/curve_oracle.py
  auto c = fit_curve(0.1, 1.0);
  CHECK(c.a == doctest::Approx(1.5769434602697652).epsilon(1e-6));
  CHECK(c.b == doctest::Approx(0.8950608778515733).epsilon(1e-6));
  c = fit_curve(0.5, 1.0);
  CHECK(c.a == doctest::Approx(0.5830300203414425).epsilon(1e-6));
  CHECK(c.b == doctest::Approx(1.3341669924314914).epsilon(1e-6));
  c = fit_curve(0.01, 1.0);
  CHECK(c.a == doctest::Approx(1.8956058664339035).epsilon(1e-6));
  CHECK(c.b == doctest::Approx(0.8006378442860499).epsilon(1e-6));
}

TEST_CASE("pca initialisation spans the init extent") {
  const auto x = test::uniform_points(50, 5, 11);
  const auto y = pca_initialize(x);
  CHECK(y.cwiseAbs().maxCoeff() == doctest::Approx(kInitExtent));
  CHECK(std::abs(y.col(0).mean()) < 1e-9);
  const RowMatrix<double> constant = RowMatrix<double>::Ones(6, 3);
  CHECK(pca_initialize(constant).isZero());
}

TEST_CASE("fit is deterministic and seed dependent") {
  std::vector<int> labels;
  const auto x = test::gaussian_blobs(40, 3, 16, 10.0, 2, labels);
  const auto a = fit(x, quick(5));
  const auto b = fit(x, quick(5));
  const auto c = fit(x, quick(6));
  CHECK(layout_hash(a.positions) == layout_hash(b.positions));
  CHECK(layout_hash(a.positions) != layout_hash(c.positions));
  CHECK(a.positions.allFinite());
}

TEST_CASE("transform of training vectors returns their positions") {
  std::vector<int> labels;
  const auto x = test::gaussian_blobs(30, 3, 16, 10.0, 3, labels);
  const auto model = fit(x, quick());
  const Layout y = transform(model, x);
  CHECK((y - model.positions).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("transform is pure") {
  std::vector<int> labels;
  const auto x = test::gaussian_blobs(30, 3, 16, 10.0, 4, labels);
  auto params = quick();
  params.transform_epochs = 20;
  const auto model = fit(x, params);
  const auto before = layout_hash(model.positions);
  const auto queries = test::gaussian_blobs(5, 3, 16, 10.0, 99, labels);
  const auto first = transform(model, queries);
  const auto second = transform(model, queries);
  CHECK(layout_hash(first) == layout_hash(second));
  CHECK(layout_hash(model.positions) == before);
  CHECK_THROWS_AS(transform(model, RowMatrix<double>::Ones(2, 3)), Error);
}

TEST_CASE("a new point lands near its cluster") {
  std::vector<int> labels;
  const auto x = test::gaussian_blobs(40, 3, 16, 12.0, 5, labels);
  const auto model = fit(x, quick());
  RowMatrix<double> q = x.row(5) * 1.01;  // cluster 0, slightly off
  q(0, 3) += 0.05;
  const Layout p = transform(model, q);
  Eigen::RowVector2d centre = Eigen::RowVector2d::Zero();
  for (int i = 0; i < 40; ++i) centre += model.positions.row(i);
  centre /= 40;
  double spread = 0;
  for (int i = 0; i < 40; ++i) spread = std::max(spread, (model.positions.row(i) - centre).norm());
  CHECK((p.row(0) - centre).norm() <= spread);
}

TEST_CASE("duplicate rows share one position") {
  auto x = test::uniform_points(40, 6, 12);
  x.row(7) = x.row(3);
  x.row(20) = x.row(3);
  const auto model = fit(x, quick());
  CHECK(model.vertex_of[7] == model.vertex_of[3]);
  CHECK(model.vertex_row.size() == 38);
  CHECK(model.positions.row(7) == model.positions.row(3));
  CHECK(model.positions.row(20) == model.positions.row(3));
}

TEST_CASE("degenerate inputs") {
  CHECK_THROWS_AS(fit(RowMatrix<double>(0, 4), quick()), Error);
  const auto one = fit(test::uniform_points(1, 4, 1), quick());
  CHECK(one.positions.rows() == 1);
  const auto same = fit(RowMatrix<double>::Ones(5, 4), quick());
  CHECK(same.positions.isZero());
  try {
    transform(ReducerModel<double>{}, test::uniform_points(1, 4, 1));
    FAIL("expected EmptyModel");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyModel);
  }
}

}
