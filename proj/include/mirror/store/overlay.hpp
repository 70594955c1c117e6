#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "mirror/store/dataset.hpp"

namespace mirror::store {

inline constexpr std::uint32_t kOverlayVersion = 1;

struct OverlayPoint {
  std::string event_id;
  std::string source_dataset_id;
  ingest::Platform platform = ingest::Platform::YouTube;
  ingest::EventKind kind = ingest::EventKind::Watched;
  double x = 0.0;
  double y = 0.0;
};

/// `other`'s events placed in `target`'s layout, next to `target`'s own
/// points. Points are tagged with the dataset they come from.
struct Overlay {
  std::string overlay_id;
  std::string target_id;
  std::string other_id;
  std::vector<OverlayPoint> points;  // target's rows first, then other's
  reduce::Layout positions;          // parallel to points
  map::SpatialIndex spatial;

  /// Rows of `points` that came from `other`.
  std::size_t other_begin() const { return points.size() - other_count; }
  std::size_t other_count = 0;

  void index() { spatial = map::SpatialIndex(positions); }
};

std::string overlay_id_for(const std::string& target_id, const std::string& other_id);

/// Projects `other`'s vectors with `target`'s reducer. Neither dataset is
/// modified. Throws Error{ProviderMismatch} when embedding provider or
/// dimension differ.
Overlay overlay_datasets(const MapDataset& target, const MapDataset& other);

/// Positions assigned to `other`'s events only.
reduce::Layout projected_positions(const Overlay& overlay);

std::vector<OverlayPoint> query_overlay(const Overlay& overlay, const map::BBox& box);

nlohmann::json to_json(const Overlay& overlay);
Overlay overlay_from_json(const nlohmann::json& j);

void save_overlay(const DatasetStore& store, const Overlay& overlay);
/// Throws Error{UnknownOverlay}.
Overlay load_overlay(const DatasetStore& store, const std::string& overlay_id);

}  // namespace mirror::store
