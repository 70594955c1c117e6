#pragma once

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "mirror/map/geometry.hpp"
#include "mirror/reduce/layout.hpp"

namespace mirror::map {

using reduce::Index;
using reduce::Layout;

inline constexpr int kDefaultResolution = 256;
inline constexpr double kKernelRadius = 4.0;  // in bandwidths
inline constexpr double kExtentMargin = 0.05;

/// Gaussian kernel density sampled at cell centres. values is row-major,
/// row = y cell, column = x cell.
struct DensityGrid {
  BBox extent;
  int resolution = 0;
  double bandwidth = 0.0;
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> values;

  double cell_width() const { return extent.width() / resolution; }
  double cell_height() const { return extent.height() / resolution; }
  double cell_area() const { return cell_width() * cell_height(); }
  Eigen::Vector2d cell_center(int ix, int iy) const {
    return {extent.min_x + (ix + 0.5) * cell_width(), extent.min_y + (iy + 0.5) * cell_height()};
  }
  /// Sum of values times cell area; approximately the number of points.
  double mass() const { return values.sum() * cell_area(); }
  /// Cell containing (x, y), clamped to the grid.
  std::pair<int, int> cell_of(double x, double y) const;
};

/// Scott's rule for two dimensions: n^(-1/6) times the mean per-axis
/// standard deviation. 1.0 when the spread is zero.
double scott_bandwidth(const Layout& positions, std::span<const Index> rows = {});

/// Layout bounding box padded on each side by max(5% of its span, 4h), so
/// the truncated kernels of edge points stay on the grid.
BBox density_extent(const Layout& positions, double bandwidth);

struct DensityOptions {
  std::optional<double> bandwidth;  // Scott's rule when unset
  int resolution = kDefaultResolution;
  std::optional<BBox> extent;       // pin to a dataset-wide extent
};

/// Truncated (radius 4h) Gaussian KDE over all rows, or only `rows` when
/// given. A grid over an empty subset is all zeros.
DensityGrid kde_density(const Layout& positions, const DensityOptions& options = {},
                        std::optional<std::span<const Index>> rows = std::nullopt);

}  // namespace mirror::map
