#include "mirror/map/labels.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mirror::map {

std::size_t utf8_length(std::string_view text) {
  std::size_t n = 0;
  for (unsigned char c : text)
    if ((c & 0xC0) != 0x80) ++n;
  return n;
}

BBox label_box(std::string_view label, const Eigen::Vector2d& anchor, int zoom, const LabelMetrics& metrics) {
  const double scale = metrics.base_pixels_per_unit * std::ldexp(1.0, zoom);
  const double half_w = 0.5 * metrics.char_width_em * metrics.font_px * static_cast<double>(utf8_length(label)) / scale;
  const double half_h = 0.5 * metrics.line_height_em * metrics.font_px / scale;
  return {anchor.x() - half_w, anchor.y() - half_h, anchor.x() + half_w, anchor.y() + half_h};
}

std::vector<LabelPlacement> place_labels(const topics::TopicTree& tree, const BBox& viewport, int zoom,
                                         const LabelMetrics& metrics,
                                         const std::function<bool(const topics::TopicNode&)>& keep) {
  std::vector<std::size_t> order(tree.nodes.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return tree.nodes[a].rank < tree.nodes[b].rank; });

  std::vector<LabelPlacement> placed;
  for (std::size_t i : order) {
    const auto& node = tree.nodes[i];
    if (node.zoom_min > zoom || !viewport.contains(node.anchor.x(), node.anchor.y())) continue;
    if (keep && !keep(node)) continue;
    const BBox box = label_box(node.label, node.anchor, zoom, metrics);
    const bool clash = std::any_of(placed.begin(), placed.end(),
                                   [&](const LabelPlacement& p) { return intersects(p.box, box); });
    if (clash) continue;
    placed.push_back({i, node.label, node.rank, node.zoom_min, node.anchor, box});
  }
  return placed;
}

}  // namespace mirror::map
