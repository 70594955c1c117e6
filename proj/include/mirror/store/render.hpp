#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "mirror/store/dataset.hpp"
#include "mirror/store/overlay.hpp"

namespace mirror::store {

// Wire encodings shared by the HTTP API and the CLI.
nlohmann::json to_json(const ViewportPoint& p);
nlohmann::json to_json(const OverlayPoint& p);
nlohmann::json to_json(const map::Contour& c);
nlohmann::json to_json(const map::LabelPlacement& l);
nlohmann::json to_json(const map::TimeWindow& w);
nlohmann::json to_json(const map::ViewportSummary& s);
nlohmann::json event_detail(const ingest::FootprintEvent& e, const topics::TopicAssignment& topics,
                            const reduce::Layout& positions, std::size_t row);
nlohmann::json kind_legend();

/// Full-extent export: manifest, every point, default-level contours and
/// level-0 labels at zoom 0.
nlohmann::json export_json(const MapDataset& ds);

struct SvgOptions {
  int width = 1024;
  int height = 1024;
  double point_radius = 1.6;
};

/// Static render of points coloured by kind, the default contours, the
/// level-0 labels and the kind legend.
std::string export_svg(const MapDataset& ds, const SvgOptions& options = {});

}  // namespace mirror::store
