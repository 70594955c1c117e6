#include "mirror/map/density.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "mirror/core/error.hpp"

namespace mirror::map {

BBox parse_bbox(std::string_view text) {
  double v[4];
  std::size_t pos = 0;
  for (int i = 0; i < 4; ++i) {
    const std::size_t end = i < 3 ? text.find(',', pos) : text.size();
    if (end == std::string_view::npos) throw Error(ErrorCode::BadBBox, "bbox needs four comma-separated numbers");
    const std::string part(text.substr(pos, end - pos));
    char* stop = nullptr;
    v[i] = std::strtod(part.c_str(), &stop);
    if (part.empty() || stop != part.c_str() + part.size() || !std::isfinite(v[i]))
      throw Error(ErrorCode::BadBBox, "bbox component '" + part + "' is not a number");
    pos = end + 1;
  }
  BBox b{v[0], v[1], v[2], v[3]};
  if (!b.valid()) throw Error(ErrorCode::BadBBox, "bbox min exceeds max");
  return b;
}

std::string format_bbox(const BBox& b) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g", b.min_x, b.min_y, b.max_x, b.max_y);
  return buf;
}

std::pair<int, int> DensityGrid::cell_of(double x, double y) const {
  const int ix = std::clamp(static_cast<int>(std::floor((x - extent.min_x) / cell_width())), 0, resolution - 1);
  const int iy = std::clamp(static_cast<int>(std::floor((y - extent.min_y) / cell_height())), 0, resolution - 1);
  return {ix, iy};
}

double scott_bandwidth(const Layout& positions, std::span<const Index> rows) {
  const Index n = rows.empty() ? positions.rows() : static_cast<Index>(rows.size());
  if (n < 2) return 1.0;
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  auto at = [&](Index i) -> Eigen::Vector2d {
    return positions.row(rows.empty() ? i : rows[static_cast<std::size_t>(i)]).transpose();
  };
  for (Index i = 0; i < n; ++i) mean += at(i);
  mean /= static_cast<double>(n);
  Eigen::Vector2d var = Eigen::Vector2d::Zero();
  for (Index i = 0; i < n; ++i) var += (at(i) - mean).cwiseAbs2();
  var /= static_cast<double>(n - 1);
  const double sigma = 0.5 * (std::sqrt(var[0]) + std::sqrt(var[1]));
  if (!(sigma > 0.0)) return 1.0;
  return sigma * std::pow(static_cast<double>(n), -1.0 / 6.0);
}

BBox density_extent(const Layout& positions, double bandwidth) {
  if (positions.rows() == 0) {
    const double r = kKernelRadius * bandwidth;
    return {-r, -r, r, r};
  }
  const Eigen::RowVector2d lo = positions.colwise().minCoeff();
  const Eigen::RowVector2d hi = positions.colwise().maxCoeff();
  const double pad_x = std::max(kExtentMargin * (hi[0] - lo[0]), kKernelRadius * bandwidth);
  const double pad_y = std::max(kExtentMargin * (hi[1] - lo[1]), kKernelRadius * bandwidth);
  return {lo[0] - pad_x, lo[1] - pad_y, hi[0] + pad_x, hi[1] + pad_y};
}

DensityGrid kde_density(const Layout& positions, const DensityOptions& options,
                        std::optional<std::span<const Index>> rows) {
  if (options.resolution < 2) throw Error(ErrorCode::InvalidArgument, "density resolution must be >= 2");
  const std::span<const Index> subset = rows.value_or(std::span<const Index>{});
  const double h = options.bandwidth.value_or(scott_bandwidth(positions, subset));
  if (!(h > 0.0)) throw Error(ErrorCode::InvalidArgument, "bandwidth must be positive");

  DensityGrid grid;
  grid.resolution = options.resolution;
  grid.bandwidth = h;
  if (options.extent) {
    grid.extent = *options.extent;
  } else if (rows) {
    Layout picked(static_cast<Index>(subset.size()), 2);
    for (std::size_t i = 0; i < subset.size(); ++i) picked.row(static_cast<Index>(i)) = positions.row(subset[i]);
    grid.extent = density_extent(picked, h);
  } else {
    grid.extent = density_extent(positions, h);
  }
  grid.values.setZero(grid.resolution, grid.resolution);

  const double cw = grid.cell_width(), ch = grid.cell_height();
  const double radius = kKernelRadius * h;
  const double norm = 1.0 / (2.0 * std::numbers::pi * h * h);
  const double inv2h2 = 1.0 / (2.0 * h * h);

  auto splat = [&](double px, double py) {
    const int x0 = std::max(0, static_cast<int>(std::floor((px - radius - grid.extent.min_x) / cw - 0.5)));
    const int x1 = std::min(grid.resolution - 1, static_cast<int>(std::ceil((px + radius - grid.extent.min_x) / cw - 0.5)));
    const int y0 = std::max(0, static_cast<int>(std::floor((py - radius - grid.extent.min_y) / ch - 0.5)));
    const int y1 = std::min(grid.resolution - 1, static_cast<int>(std::ceil((py + radius - grid.extent.min_y) / ch - 0.5)));
    for (int iy = y0; iy <= y1; ++iy) {
      const double dy = grid.extent.min_y + (iy + 0.5) * ch - py;
      for (int ix = x0; ix <= x1; ++ix) {
        const double dx = grid.extent.min_x + (ix + 0.5) * cw - px;
        const double r2 = dx * dx + dy * dy;
        if (r2 <= radius * radius) grid.values(iy, ix) += norm * std::exp(-r2 * inv2h2);
      }
    }
  };

  if (rows) {
    for (Index i : subset) splat(positions(i, 0), positions(i, 1));
  } else {
    for (Index i = 0; i < positions.rows(); ++i) splat(positions(i, 0), positions(i, 1));
  }
  return grid;
}

}  // namespace mirror::map
