#pragma once

#include <cstdint>
#include <vector>

#include "mirror/map/geometry.hpp"
#include "mirror/reduce/layout.hpp"

namespace mirror::map {

/// Uniform bucket grid over a fixed layout. Results are ascending row
/// indices and equal a linear scan with inclusive bbox edges.
class SpatialIndex {
 public:
  SpatialIndex() = default;
  /// cells_per_axis = 0 picks about four points per bucket.
  explicit SpatialIndex(const reduce::Layout& positions, int cells_per_axis = 0);

  std::vector<reduce::Index> query(const BBox& box) const;
  reduce::Index size() const { return positions_.rows(); }

 private:
  int cell_x(double x) const;
  int cell_y(double y) const;

  reduce::Layout positions_;
  BBox extent_;
  int cells_ = 1;
  double inv_w_ = 0.0;
  double inv_h_ = 0.0;
  std::vector<std::uint32_t> offsets_;  // CSR: bucket b spans [offsets_[b], offsets_[b+1])
  std::vector<reduce::Index> items_;
};

/// Reference implementation used in tests.
std::vector<reduce::Index> linear_scan(const reduce::Layout& positions, const BBox& box);

}  // namespace mirror::map
