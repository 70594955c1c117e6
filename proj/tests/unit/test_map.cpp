#include <doctest.h>

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "mirror/core/error.hpp"
#include "mirror/map/contours.hpp"
#include "mirror/map/density.hpp"
#include "mirror/map/labels.hpp"
#include "mirror/map/spatial_index.hpp"
#include "mirror/map/summary.hpp"
#include "mirror/map/timeline.hpp"
#include "mock_http.hpp"
#include "support.hpp"

using namespace mirror;
using namespace mirror::map;

namespace {

reduce::Layout random_layout(int n, std::uint64_t seed, double scale = 10.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, scale);
  reduce::Layout y(n, 2);
  for (int i = 0; i < n; ++i) y.row(i) << normal(rng), normal(rng);
  return y;
}

DensityGrid fixture_field() {
  std::ifstream in(test::fixture_path("contour_field.csv"));
  std::vector<std::vector<double>> rows;
  for (std::string line; std::getline(in, line);) {
    std::vector<double> row;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) row.push_back(std::stod(cell));
    rows.push_back(row);
  }
  DensityGrid g;
  g.resolution = static_cast<int>(rows.size());
  g.extent = {0, 0, double(g.resolution), double(g.resolution)};
  g.values.resize(g.resolution, g.resolution);
  for (int r = 0; r < g.resolution; ++r)
    for (int c = 0; c < g.resolution; ++c) g.values(r, c) = rows[r][c];
  return g;
}

double interpolated(const DensityGrid& g, const Eigen::Vector2d& p, const LatticeEdge& e) {
  const double v0 = g.values(e.iy, e.ix);
  const double v1 = e.vertical ? g.values(e.iy + 1, e.ix) : g.values(e.iy, e.ix + 1);
  const Eigen::Vector2d c0 = g.cell_center(e.ix, e.iy);
  const double t = e.vertical ? (p.y() - c0.y()) / g.cell_height() : (p.x() - c0.x()) / g.cell_width();
  return v0 + t * (v1 - v0);
}

std::vector<ingest::FootprintEvent> events_at(const std::vector<std::string>& times) {
  std::vector<ingest::FootprintEvent> events;
  for (const auto& t : times) {
    ingest::FootprintEvent e;
    e.timestamp = parse_instant(t);
    e.title = e.text_payload = t;
    events.push_back(e);
  }
  ingest::finalize_events(events);
  return events;
}

topics::TopicTree random_tree(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-20, 20);
  topics::TopicTree tree;
  for (std::size_t i = 0; i < n; ++i) {
    topics::TopicNode node;
    node.label = test::themes()[i % test::themes().size()].name;
    node.rank = static_cast<int>(i + 1);
    node.zoom_min = static_cast<int>(i / 8);
    node.count = 1;
    node.anchor = {u(rng), u(rng)};
    tree.nodes.push_back(node);
  }
  return tree;
}

class FailingSummary : public SummaryProvider {
 public:
  std::string id() const override { return "failing"; }
  bool remote() const override { return true; }
  std::string summarize(std::span<const SummaryItem>) override {
    throw Error(ErrorCode::ProviderUnavailable, "offline");
  }
};

}  // namespace

TEST_SUITE("map") {

TEST_CASE("bbox parsing and predicates") {
  const auto b = parse_bbox("-1.5,2,3,4e1");
  CHECK(b == BBox{-1.5, 2, 3, 40});
  CHECK(parse_bbox(format_bbox(b)) == b);
  CHECK(b.contains(3, 40));
  CHECK_FALSE(b.contains(3.0001, 40));
  for (const char* bad : {"", "1,2,3", "1,2,3,4,5", "a,b,c,d", "3,0,1,1", "0,0,1,nan", "1, 2,3,4x"}) {
    CAPTURE(bad);
    CHECK_THROWS_AS(parse_bbox(bad), Error);
  }
  CHECK(intersects({0, 0, 2, 2}, {1, 1, 3, 3}));
  CHECK_FALSE(intersects({0, 0, 1, 1}, {1, 0, 2, 1}));  // touching edges do not overlap
}

TEST_CASE("scott bandwidth") {
  reduce::Layout y(4, 2);
  y << 0, 0, 2, 0, 0, 4, 2, 4;
  const double sx = std::sqrt(4.0 / 3.0), sy = std::sqrt(16.0 / 3.0);
  CHECK(scott_bandwidth(y) == doctest::Approx(std::pow(4.0, -1.0 / 6.0) * 0.5 * (sx + sy)));
  CHECK(scott_bandwidth(reduce::Layout::Zero(3, 2)) == 1.0);
  const std::vector<reduce::Index> rows{0, 1};
  CHECK(scott_bandwidth(y, rows) == doctest::Approx(std::pow(2.0, -1.0 / 6.0) * 0.5 * std::sqrt(2.0)));
}

TEST_CASE("density mass matches the point count") {
  const auto y = random_layout(2000, 1);
  const auto g = kde_density(y);
  CHECK(g.resolution == kDefaultResolution);
  CHECK(g.mass() == doctest::Approx(2000).epsilon(0.02));
  CHECK((g.values.array() >= 0).all());
  DensityOptions opts;
  opts.resolution = 64;
  opts.bandwidth = 0.5;
  CHECK(kde_density(y, opts).mass() == doctest::Approx(2000).epsilon(0.02));
}

TEST_CASE("density extent pads every side") {
  const auto y = random_layout(100, 2);
  const double h = 1.5;
  const auto e = density_extent(y, h);
  const double pad_x = std::max(0.05 * (y.col(0).maxCoeff() - y.col(0).minCoeff()), 4 * h);
  CHECK(e.min_x == doctest::Approx(y.col(0).minCoeff() - pad_x));
  CHECK(e.max_x == doctest::Approx(y.col(0).maxCoeff() + pad_x));
}

TEST_CASE("density over a subset with a pinned extent") {
  const auto y = random_layout(500, 3);
  const auto full = kde_density(y);
  DensityOptions opts;
  opts.extent = full.extent;
  opts.bandwidth = full.bandwidth;
  std::vector<reduce::Index> rows(100);
  std::iota(rows.begin(), rows.end(), 0);
  const auto part = kde_density(y, opts, std::span<const reduce::Index>(rows));
  CHECK(part.extent == full.extent);
  CHECK(part.mass() == doctest::Approx(100).epsilon(0.02));
  const auto none = kde_density(y, opts, std::span<const reduce::Index>());
  CHECK(none.values.isZero());
}

TEST_CASE("contour vertices match the marching squares reference") {
  // tests/oracles/contour_oracle.py
  const auto g = fixture_field();
  std::map<double, std::vector<Eigen::Vector2d>> expected;
  std::ifstream in(test::fixture_path("contour_vertices.csv"));
  for (std::string line; std::getline(in, line);) {
    double level, x, yv;
    REQUIRE(std::sscanf(line.c_str(), "%lf,%lf,%lf", &level, &x, &yv) == 3);
    expected[level].emplace_back(x, yv);
  }
  REQUIRE(expected.size() == 2);
  for (const auto& [level, want] : expected) {
    CAPTURE(level);
    std::vector<Eigen::Vector2d> got;
    for (const auto& c : contour_lines(g, level))
      for (const auto& p : c.points) got.push_back(p);
    CHECK(got.size() == want.size());
    for (const auto& w : want) {
      double best = 1e9;
      for (const auto& p : got) best = std::min(best, (p - w).norm());
      CHECK(best < 1e-6);
    }
  }
}

TEST_CASE("contour vertices interpolate to their level") {
  const auto g = kde_density(random_layout(800, 4));
  for (double level : default_levels(g)) {
    for (const auto& c : contour_lines(g, level)) {
      REQUIRE(c.points.size() == c.edges.size());
      for (std::size_t i = 0; i < c.points.size(); ++i)
        CHECK(std::abs(interpolated(g, c.points[i], c.edges[i]) - level) < 1e-6);
    }
  }
}

TEST_CASE("single kernel isoline is a circle of the analytic radius") {
  reduce::Layout y = reduce::Layout::Zero(1, 2);
  DensityOptions opts;
  opts.bandwidth = 1.0;
  opts.resolution = 200;
  opts.extent = BBox{-5, -5, 5, 5};
  const auto g = kde_density(y, opts);
  const double r = 2.0;
  const double level = std::exp(-r * r / 2) / (2 * std::numbers::pi);
  const auto lines = contour_lines(g, level);
  REQUIRE(lines.size() == 1);
  CHECK(lines[0].closed);
  for (const auto& p : lines[0].points) CHECK(p.norm() == doctest::Approx(r).epsilon(0.01));
}

TEST_CASE("open contours touch the border") {
  DensityGrid g;
  g.resolution = 8;
  g.extent = {0, 0, 8, 8};
  g.values.resize(8, 8);
  for (int r = 0; r < 8; ++r)
    for (int c = 0; c < 8; ++c) g.values(r, c) = c;
  const auto lines = contour_lines(g, 3.5);
  REQUIRE(lines.size() == 1);
  CHECK_FALSE(lines[0].closed);
  CHECK(lines[0].points.size() == 8);
  for (const auto& p : lines[0].points) CHECK(p.x() == doctest::Approx(4.0));
  CHECK(contour_lines(g, 100).empty());
}

TEST_CASE("default levels are increasing and below the peak") {
  const auto g = kde_density(random_layout(300, 5));
  const auto levels = default_levels(g);
  CHECK(levels.size() == 5);
  for (std::size_t i = 1; i < levels.size(); ++i) CHECK(levels[i] > levels[i - 1]);
  CHECK(levels.back() < g.values.maxCoeff());
  DensityGrid empty;
  empty.resolution = 2;
  empty.values = Eigen::MatrixXd::Zero(2, 2);
  CHECK(default_levels(empty).empty());
}

TEST_CASE("label boxes scale with zoom and text length") {
  const LabelMetrics m;
  const auto b0 = label_box("abcd", {0, 0}, 0, m);
  CHECK(b0.width() == doctest::Approx(0.62 * 12 * 4 / 8.0));
  CHECK(b0.height() == doctest::Approx(1.2 * 12 / 8.0));
  const auto b2 = label_box("abcd", {0, 0}, 2, m);
  CHECK(b2.width() == doctest::Approx(b0.width() / 4));
  CHECK(label_box("café", {0, 0}, 0, m).width() == doctest::Approx(b0.width()));
  CHECK(utf8_length("naïve") == 5);
}

TEST_CASE("placement equals the greedy oracle and never overlaps") {
  const LabelMetrics m;
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-25, 25);
  for (int trial = 0; trial < 60; ++trial) {
    const auto tree = random_tree(20 + trial % 10, 100 + trial);
    const int zoom = trial % 4;
    const double x0 = u(rng), y0 = u(rng);
    const BBox view{std::min(x0, -x0), std::min(y0, -y0), std::max(x0, -x0) + 1, std::max(y0, -y0) + 1};
    const auto placed = place_labels(tree, view, zoom, m);
    std::vector<std::size_t> nodes;
    for (const auto& p : placed) nodes.push_back(p.node);
    CHECK(nodes == test::greedy_labels(tree, view, zoom, m, {}));
    for (std::size_t a = 0; a < placed.size(); ++a)
      for (std::size_t b = a + 1; b < placed.size(); ++b) CHECK_FALSE(test::boxes_overlap(placed[a].box, placed[b].box));
  }
}

TEST_CASE("placement honours zoom_min and the keep predicate") {
  const auto tree = random_tree(24, 3);
  const BBox all{-100, -100, 100, 100};
  for (const auto& p : place_labels(tree, all, 0)) CHECK(p.zoom_min == 0);
  const auto kept = place_labels(tree, all, 3, {}, [](const topics::TopicNode& n) { return n.rank % 2 == 0; });
  for (const auto& p : kept) CHECK(p.rank % 2 == 0);
  CHECK(place_labels(tree, {1000, 1000, 1001, 1001}, 3).empty());
}

TEST_CASE("time windows") {
  const auto t0 = parse_instant("2021-01-01T00:00:00Z");
  CHECK_THROWS_AS(make_window(t0, t0), Error);
  const auto w = make_window(t0, t0 + std::chrono::hours{1});
  CHECK(w.contains(t0));
  CHECK_FALSE(w.contains(w.end));
}

TEST_CASE("filter_by_time equals a linear scan") {
  test::SyntheticSpec spec;
  spec.count = 1000;
  spec.span = std::chrono::hours{24 * 365 * 3};
  const auto events = test::synthetic_events(spec);
  for (int m = 0; m < 36; ++m) {
    const auto start = add_months(month_floor(events.front().timestamp), m);
    const TimeWindow w{start, add_months(start, 1)};
    std::vector<std::size_t> scan;
    for (std::size_t i = 0; i < events.size(); ++i)
      if (events[i].timestamp >= w.start && events[i].timestamp < w.end) scan.push_back(i);
    CHECK(filter_by_time(events, w) == scan);
  }
}

TEST_CASE("cumulative frames start at the first month and end past the last event") {
  const auto events = events_at({"2019-03-15T10:00:00Z", "2019-05-01T00:00:00Z", "2020-01-31T23:59:59Z"});
  const auto frames = animation_frames(events);
  REQUIRE(frames.size() == 11);
  CHECK(frames.front().start == parse_instant("2019-03-01"));
  CHECK(frames.front().end == parse_instant("2019-04-01"));
  CHECK(frames.back().end == parse_instant("2020-02-01"));
  for (const auto& f : frames) CHECK(f.start == frames.front().start);
  CHECK(filter_by_time(events, frames.back()).size() == 3);
}

TEST_CASE("an event on a month boundary opens a new frame") {
  const auto events = events_at({"2019-01-10T00:00:00Z", "2019-03-01T00:00:00Z"});
  const auto frames = animation_frames(events);
  CHECK(frames.size() == 3);
  CHECK(frames.back().contains(parse_instant("2019-03-01T00:00:00Z")));
}

TEST_CASE("monthly frames and explicit starts") {
  const auto events = events_at({"2019-01-10T00:00:00Z", "2019-03-05T00:00:00Z"});
  const auto monthly = animation_frames(events, std::nullopt, FrameMode::Monthly);
  REQUIRE(monthly.size() == 3);
  CHECK(monthly[1].start == parse_instant("2019-02-01"));
  CHECK(monthly[1].end == parse_instant("2019-03-01"));
  CHECK(animation_frames(events, parse_instant("2019-02-20")).size() == 2);
  CHECK(animation_frames(events, parse_instant("2020-01-01")).empty());
  CHECK(animation_frames({}).empty());
}

TEST_CASE("spatial index equals a linear scan") {
  const auto y = random_layout(5000, 9);
  const SpatialIndex index(y);
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> u(-40, 40);
  for (int q = 0; q < 300; ++q) {
    const double a = u(rng), b = u(rng), c = u(rng), d = u(rng);
    const BBox box{std::min(a, b), std::min(c, d), std::max(a, b), std::max(c, d)};
    CHECK(index.query(box) == linear_scan(y, box));
  }
  const double inf = std::numeric_limits<double>::infinity();
  CHECK(index.query({-inf, -inf, inf, inf}).size() == 5000);
  CHECK(index.query({100, 100, 200, 200}).empty());
  CHECK(SpatialIndex(reduce::Layout(0, 2)).query({-1, -1, 1, 1}).empty());
  const SpatialIndex same(reduce::Layout::Constant(10, 2, 1.0));
  CHECK(same.query({1, 1, 1, 1}).size() == 10);
}

TEST_CASE("sampling is seeded, distinct and sorted") {
  const auto a = sample_indices(100, 20, 4);
  CHECK(a == sample_indices(100, 20, 4));
  CHECK(a != sample_indices(100, 20, 5));
  CHECK(a.size() == 20);
  CHECK(std::is_sorted(a.begin(), a.end()));
  CHECK(std::adjacent_find(a.begin(), a.end()) == a.end());
  CHECK(sample_indices(5, 20, 1) == std::vector<std::size_t>{0, 1, 2, 3, 4});
  CHECK(sample_indices(0, 3, 1).empty());
}

TEST_CASE("stub summary and provider fallback") {
  std::vector<SummaryItem> items;
  for (int i = 0; i < 30; ++i)
    items.push_back({"e" + std::to_string(i), "payload", {i % 3 == 0 ? "jazz" : "blues", i % 2 ? "piano" : "Jazz"}});
  CHECK(stub_summary(std::span(items).first(2)) == "2 items; top topics: blues, jazz, piano");
  CHECK(stub_summary({}) == "0 items; top topics: none");

  StubSummaryProvider stub;
  const auto s = summarize_viewport(items, 10, stub, 42);
  CHECK(s.visible == 30);
  CHECK(s.sampled_event_ids.size() == 10);
  CHECK(s.provider_id == "stub");
  CHECK_FALSE(s.degraded);
  CHECK(s.text.starts_with("10 items; top topics: "));
  CHECK(summarize_viewport(items, 10, stub, 42).sampled_event_ids == s.sampled_event_ids);

  FailingSummary failing;
  const auto f = summarize_viewport(items, 10, failing, 42);
  CHECK(f.degraded);
  CHECK(f.text == s.text);
  CHECK_THROWS_AS(summarize_viewport(items, 0, stub, 1), Error);
}

TEST_CASE("remote summary") {
  test::MockHttp mock;
  mock.server.Post("/summary", [](const httplib::Request& req, httplib::Response& res) {
    const auto body = nlohmann::json::parse(req.body);
    res.set_content(nlohmann::json{{"summary", "saw " + std::to_string(body["texts"].size())}}.dump(),
                    "application/json");
  });
  mock.start();
  RemoteSummaryProvider remote({mock.url("/summary"), "p", "", std::chrono::seconds{5}});
  std::vector<SummaryItem> items{{"a", "x", {}}, {"b", "y", {}}, {"c", "z", {}}};
  const auto s = summarize_viewport(items, 2, remote, 1);
  CHECK(s.text == "saw 2");
  CHECK_FALSE(s.degraded);
}

}
