#pragma once

#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "mirror/embed/embedding.hpp"
#include "mirror/ingest/event.hpp"
#include "mirror/map/contours.hpp"
#include "mirror/map/density.hpp"
#include "mirror/map/labels.hpp"
#include "mirror/map/spatial_index.hpp"
#include "mirror/map/summary.hpp"
#include "mirror/map/timeline.hpp"
#include "mirror/reduce/reducer.hpp"
#include "mirror/store/manifest.hpp"
#include "mirror/topics/topics.hpp"

namespace mirror::store {

using Model = reduce::ReducerModel<float>;

/// A built dataset held in memory. Events are sorted by timestamp and row i
/// of vectors and positions belongs to events[i].
struct MapDataset {
  DatasetManifest manifest;
  std::vector<ingest::FootprintEvent> events;
  embed::EmbeddingMatrix vectors;
  Model model;
  std::vector<topics::TopicAssignment> assignments;  // parallel to events
  topics::TopicTree tree;
  map::DensityGrid density;

  // Derived on load.
  topics::PositionIndex row_of;
  map::SpatialIndex spatial;

  const reduce::Layout& positions() const { return model.positions; }
  /// Throws Error{UnknownPoint}.
  std::size_t row(const std::string& event_id) const;
  /// Rebuilds row_of and spatial.
  void index();
  /// Throws Error{IoError} when component counts disagree or ids dangle.
  void validate() const;
};

struct ViewportPoint {
  std::size_t row = 0;
  std::string event_id;
  ingest::EventKind kind = ingest::EventKind::Watched;
  ingest::Platform platform = ingest::Platform::YouTube;
  double x = 0.0;
  double y = 0.0;
};

/// Points inside `box` (inclusive), optionally restricted to `window`,
/// ascending by row.
std::vector<ViewportPoint> query_viewport(const MapDataset& ds, const map::BBox& box,
                                          const std::optional<map::TimeWindow>& window = std::nullopt);

/// Rows whose events fall in `window`, or every row when unset.
std::vector<reduce::Index> rows_in_window(const MapDataset& ds, const std::optional<map::TimeWindow>& window);

/// Density over the rows of `window`, on the dataset's extent and
/// bandwidth so frames stay comparable. Unwindowed returns the stored grid.
map::DensityGrid window_density(const MapDataset& ds, const std::optional<map::TimeWindow>& window);

/// The topic tree restricted to `window`: each node's count and anchor are
/// recomputed from in-window members and ranks reassigned by the new
/// counts (ties by the build rank). Nodes left without members get count 0.
topics::TopicTree window_tree(const MapDataset& ds, const std::optional<map::TimeWindow>& window);

/// Labels for a viewport over window_tree; nodes with count 0 are skipped.
std::vector<map::LabelPlacement> viewport_labels(const MapDataset& ds, const map::BBox& box, int zoom,
                                                 const std::optional<map::TimeWindow>& window = std::nullopt,
                                                 const map::LabelMetrics& metrics = {});

std::vector<map::SummaryItem> summary_items(const MapDataset& ds, std::span<const std::size_t> rows);

// Component files.
void write_model(const std::filesystem::path& path, const Model& model);
/// `training` is the dataset's vectors; it is not duplicated on disk.
Model read_model(const std::filesystem::path& path, const embed::EmbeddingMatrix& training,
                 const reduce::Layout& positions);

nlohmann::json topics_to_json(const std::string& provider_id, const std::vector<topics::TopicAssignment>& a);
std::vector<topics::TopicAssignment> topics_from_json(const nlohmann::json& j);
nlohmann::json tree_to_json(const topics::TopicTree& tree);
topics::TopicTree tree_from_json(const nlohmann::json& j);

void write_density(const std::filesystem::path& path, const map::DensityGrid& grid);
map::DensityGrid read_density(const std::filesystem::path& path);

/// Also records the positions hash in ds.manifest.
void write_dataset(const std::filesystem::path& dir, MapDataset& ds);
/// Reads and validates every component. Throws Error{UnknownVersion} on an
/// unknown format version.
MapDataset load_dataset(const std::filesystem::path& dir);

/// Exclusive advisory lock on `<path>`; released on destruction. Throws
/// Error{Locked} when another holder has it and `wait` is false.
class FileLock {
 public:
  explicit FileLock(const std::filesystem::path& path, bool wait = true);
  ~FileLock();
  FileLock(const FileLock&) = delete;
  FileLock& operator=(const FileLock&) = delete;

 private:
  int fd_ = -1;
};

/// Data root with one subdirectory per dataset under datasets/, the shared
/// embedding caches under cache/ and overlays under overlays/.
class DatasetStore {
 public:
  explicit DatasetStore(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }
  std::filesystem::path dataset_dir(const std::string& id) const;
  std::filesystem::path cache_dir() const { return root_ / "cache"; }
  std::filesystem::path overlay_dir() const { return root_ / "overlays"; }

  bool contains(const std::string& id) const;
  /// Manifests of every complete dataset, by id.
  std::vector<DatasetManifest> list() const;
  /// Loaded once and shared; throws Error{UnknownDataset}.
  std::shared_ptr<const MapDataset> get(const std::string& id) const;
  /// Drops a cached load so the next get() re-reads the directory.
  void invalidate(const std::string& id);

 private:
  std::filesystem::path root_;
  mutable std::shared_mutex mutex_;
  mutable std::unordered_map<std::string, std::shared_ptr<const MapDataset>> loaded_;
};

}  // namespace mirror::store
