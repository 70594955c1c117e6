#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "mirror/ingest/event.hpp"
#include "mirror/map/labels.hpp"
#include "mirror/reduce/knn.hpp"
#include "mirror/reduce/layout.hpp"
#include "mirror/store/build.hpp"
#include "mirror/topics/topics.hpp"

namespace mirror::test {

std::filesystem::path fixture_path(std::string_view name);
std::string read_fixture(std::string_view name);

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(std::string_view tag = "mirror");
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(std::string_view p) const { return path_ / p; }

 private:
  std::filesystem::path path_;
};

// ---------------------------------------------------------------------------
// synthetic inputs

/// `clusters` isotropic Gaussians with unit std whose centres sit on
/// scaled simplex vertices, pairwise `separation` apart.
RowMatrix<double> gaussian_blobs(int per_cluster, int clusters, int dim, double separation, std::uint64_t seed,
                                 std::vector<int>& labels);

RowMatrix<double> uniform_points(int n, int dim, std::uint64_t seed);

/// 30 named themes, each with its own vocabulary.
struct Theme {
  std::string name;
  std::vector<std::string> words;
};
const std::vector<Theme>& themes();
extern const std::vector<std::string> kMusicThemes;
extern const std::vector<std::string> kCookingThemes;

struct SyntheticSpec {
  std::size_t count = 1000;
  std::vector<std::string> themes;  // names; empty picks all
  ingest::Platform platform = ingest::Platform::YouTube;
  Instant start = Instant{std::chrono::milliseconds{1'577'836'800'000}};  // 2020-01-01
  std::chrono::hours span{24 * 365};
  double search_fraction = 0.0;
  std::uint64_t seed = 1;
};

/// Finalized events whose payloads mix a theme name with theme words.
/// `theme_of` receives the theme index of each event (pre-sort order is
/// not kept; indices follow the returned order).
std::vector<ingest::FootprintEvent> synthetic_events(const SyntheticSpec& spec, std::vector<int>* theme_of = nullptr);

/// A Takeout watch-history JSON document for the same generator.
std::string synthetic_takeout(const SyntheticSpec& spec);

/// Topic stub that labels each payload by the first theme name it contains
/// and pads with extra labels up to `labels_per_item`.
class ThemeTopicProvider final : public topics::TopicProvider {
 public:
  explicit ThemeTopicProvider(std::size_t labels_per_item = 1) : per_item_(labels_per_item) {}
  std::string id() const override { return "theme-stub"; }
  bool remote() const override { return false; }
  std::vector<std::string> topics_for(std::size_t index, std::string_view text) override;

 private:
  std::size_t per_item_;
};

/// In-memory build with the local hash provider and the theme topic stub.
store::MapDataset build_synthetic(const std::vector<ingest::FootprintEvent>& events, std::string dataset_id,
                                  const store::BuildConfig& config = {}, std::size_t labels_per_item = 1);

// ---------------------------------------------------------------------------
// independent oracles

/// Exact k-NN by a plain double loop and a full sort, without the
/// library's blocking or heaps.
struct OracleNeighbor {
  reduce::Index index;
  double distance;
};
std::vector<std::vector<OracleNeighbor>> brute_knn(const RowMatrix<double>& x, reduce::Index k,
                                                   reduce::Metric metric);

/// Lloyd's k-means with k-means++ seeding, best of `restarts` by inertia.
std::vector<int> kmeans(const reduce::Layout& points, int k, std::uint64_t seed, int restarts = 10);

double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b);

/// Greedy label placement re-derived from the definition: candidates in
/// ascending rank (then node index), a box is kept unless its interior
/// meets that of a kept box.
std::vector<std::size_t> greedy_labels(const topics::TopicTree& tree, const map::BBox& viewport, int zoom,
                                       const map::LabelMetrics& metrics,
                                       const std::vector<bool>& eligible);

bool boxes_overlap(const map::BBox& a, const map::BBox& b);

/// Months between the month of `first` and the month of `last`, inclusive.
int months_spanned(Instant first, Instant last);

}  // namespace mirror::test
