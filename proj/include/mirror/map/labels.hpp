#pragma once

#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "mirror/map/geometry.hpp"
#include "mirror/topics/topics.hpp"

namespace mirror::map {

/// Screen metrics used to size label boxes.
struct LabelMetrics {
  double font_px = 12.0;
  double char_width_em = 0.62;
  double line_height_em = 1.2;
  double base_pixels_per_unit = 8.0;  // at zoom 0; doubles per zoom level
};

struct LabelPlacement {
  std::size_t node = 0;
  std::string label;
  int rank = 0;
  int zoom_min = 0;
  Eigen::Vector2d anchor = Eigen::Vector2d::Zero();
  BBox box;
};

std::size_t utf8_length(std::string_view text);

/// Box of `label` centred on `anchor` at `zoom`, in layout units.
BBox label_box(std::string_view label, const Eigen::Vector2d& anchor, int zoom, const LabelMetrics& metrics = {});

/// Greedy placement in rank order of the nodes with zoom_min <= zoom whose
/// anchor lies in `viewport` (and that pass `keep`, when given): a label is
/// placed unless its box overlaps one already placed.
std::vector<LabelPlacement> place_labels(const topics::TopicTree& tree, const BBox& viewport, int zoom,
                                         const LabelMetrics& metrics = {},
                                         const std::function<bool(const topics::TopicNode&)>& keep = {});

}  // namespace mirror::map
