#pragma once

#include <algorithm>
#include <string>
#include <string_view>

namespace mirror::map {

/// Axis-aligned box in layout units; both edges inclusive for containment.
struct BBox {
  double min_x = 0.0;
  double min_y = 0.0;
  double max_x = 0.0;
  double max_y = 0.0;

  bool valid() const { return min_x <= max_x && min_y <= max_y; }
  bool contains(double x, double y) const { return x >= min_x && x <= max_x && y >= min_y && y <= max_y; }
  double width() const { return max_x - min_x; }
  double height() const { return max_y - min_y; }
  bool operator==(const BBox&) const = default;
};

/// Open-interior overlap: boxes that merely touch do not intersect.
inline bool intersects(const BBox& a, const BBox& b) {
  return a.min_x < b.max_x && b.min_x < a.max_x && a.min_y < b.max_y && b.min_y < a.max_y;
}

/// "minx,miny,maxx,maxy". Throws Error{BadBBox}.
BBox parse_bbox(std::string_view text);
std::string format_bbox(const BBox& b);

}  // namespace mirror::map
