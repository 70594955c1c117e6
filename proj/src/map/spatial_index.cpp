#include "mirror/map/spatial_index.hpp"

#include <algorithm>
#include <cmath>

namespace mirror::map {

SpatialIndex::SpatialIndex(const reduce::Layout& positions, int cells_per_axis) : positions_(positions) {
  const auto n = positions_.rows();
  if (n == 0) {
    offsets_.assign(2, 0);
    return;
  }
  cells_ = cells_per_axis > 0 ? cells_per_axis
                              : std::clamp(static_cast<int>(std::sqrt(static_cast<double>(n) / 4.0)), 1, 2048);
  const Eigen::RowVector2d lo = positions_.colwise().minCoeff();
  const Eigen::RowVector2d hi = positions_.colwise().maxCoeff();
  extent_ = {lo[0], lo[1], hi[0], hi[1]};
  inv_w_ = extent_.width() > 0 ? cells_ / extent_.width() : 0.0;
  inv_h_ = extent_.height() > 0 ? cells_ / extent_.height() : 0.0;

  const auto buckets = static_cast<std::size_t>(cells_) * static_cast<std::size_t>(cells_);
  std::vector<std::uint32_t> bucket_of(static_cast<std::size_t>(n));
  offsets_.assign(buckets + 1, 0);
  for (reduce::Index i = 0; i < n; ++i) {
    const auto b = static_cast<std::uint32_t>(cell_y(positions_(i, 1)) * cells_ + cell_x(positions_(i, 0)));
    bucket_of[static_cast<std::size_t>(i)] = b;
    ++offsets_[b + 1];
  }
  for (std::size_t b = 0; b < buckets; ++b) offsets_[b + 1] += offsets_[b];
  items_.resize(static_cast<std::size_t>(n));
  std::vector<std::uint32_t> fill(offsets_.begin(), offsets_.end() - 1);
  for (reduce::Index i = 0; i < n; ++i) items_[fill[bucket_of[static_cast<std::size_t>(i)]]++] = i;
}

int SpatialIndex::cell_x(double x) const {
  return std::clamp(static_cast<int>(std::floor((x - extent_.min_x) * inv_w_)), 0, cells_ - 1);
}

int SpatialIndex::cell_y(double y) const {
  return std::clamp(static_cast<int>(std::floor((y - extent_.min_y) * inv_h_)), 0, cells_ - 1);
}

std::vector<reduce::Index> SpatialIndex::query(const BBox& box) const {
  std::vector<reduce::Index> out;
  if (items_.empty() || !box.valid()) return out;
  if (box.max_x < extent_.min_x || box.min_x > extent_.max_x || box.max_y < extent_.min_y ||
      box.min_y > extent_.max_y)
    return out;
  const int x0 = cell_x(std::max(box.min_x, extent_.min_x)), x1 = cell_x(std::min(box.max_x, extent_.max_x));
  const int y0 = cell_y(std::max(box.min_y, extent_.min_y)), y1 = cell_y(std::min(box.max_y, extent_.max_y));
  for (int cy = y0; cy <= y1; ++cy) {
    for (int cx = x0; cx <= x1; ++cx) {
      const auto b = static_cast<std::size_t>(cy * cells_ + cx);
      for (auto k = offsets_[b]; k < offsets_[b + 1]; ++k) {
        const auto i = items_[k];
        if (box.contains(positions_(i, 0), positions_(i, 1))) out.push_back(i);
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<reduce::Index> linear_scan(const reduce::Layout& positions, const BBox& box) {
  std::vector<reduce::Index> out;
  for (reduce::Index i = 0; i < positions.rows(); ++i)
    if (box.contains(positions(i, 0), positions(i, 1))) out.push_back(i);
  return out;
}

}  // namespace mirror::map
