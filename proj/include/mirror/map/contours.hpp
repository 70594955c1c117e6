#pragma once

#include <vector>

#include <Eigen/Core>

#include "mirror/map/density.hpp"

namespace mirror::map {

/// Lattice edge between cell centres (ix, iy) and (ix+1, iy), or (ix, iy+1)
/// when vertical.
struct LatticeEdge {
  int ix = 0;
  int iy = 0;
  bool vertical = false;
  bool operator==(const LatticeEdge&) const = default;
};

struct Contour {
  double level = 0.0;
  bool closed = false;                  // closed rings do not repeat the first point
  std::vector<Eigen::Vector2d> points;  // layout coordinates
  std::vector<LatticeEdge> edges;       // edge each point lies on
};

/// Five levels at the 1/6..5/6 quantiles of the strictly positive cells,
/// deduplicated.
std::vector<double> default_levels(const DensityGrid& grid, int count = 5);

/// Marching squares on the lattice of cell centres with linear
/// interpolation along edges. Saddles are resolved by the cell mean.
/// Segments are stitched into polylines; those touching the lattice border
/// stay open.
std::vector<Contour> contour_lines(const DensityGrid& grid, double level);
std::vector<Contour> contour_lines(const DensityGrid& grid, const std::vector<double>& levels);

}  // namespace mirror::map
