#include "mirror/map/contours.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <unordered_map>

namespace mirror::map {

std::vector<double> default_levels(const DensityGrid& grid, int count) {
  std::vector<double> positive;
  positive.reserve(static_cast<std::size_t>(grid.values.size()));
  for (Eigen::Index i = 0; i < grid.values.size(); ++i)
    if (grid.values.data()[i] > 0.0) positive.push_back(grid.values.data()[i]);
  std::vector<double> levels;
  if (positive.empty()) return levels;
  std::sort(positive.begin(), positive.end());
  for (int q = 1; q <= count; ++q) {
    const auto pos = static_cast<std::size_t>(
        std::floor(static_cast<double>(q) / (count + 1) * static_cast<double>(positive.size() - 1)));
    const double v = positive[pos];
    if (v < positive.back() && (levels.empty() || v > levels.back())) levels.push_back(v);
  }
  return levels;
}

namespace {

struct Segment {
  std::array<int, 2> edge;  // edge keys
};

}  // namespace

std::vector<Contour> contour_lines(const DensityGrid& grid, double level) {
  const int n = grid.resolution;
  const auto& v = grid.values;
  auto key = [n](int ix, int iy, bool vertical) { return 2 * (iy * n + ix) + (vertical ? 1 : 0); };
  auto decode = [n](int k) {
    const int cell = k / 2;
    return LatticeEdge{cell % n, cell / n, (k % 2) == 1};
  };
  auto above = [&](int ix, int iy) { return v(iy, ix) > level; };

  std::vector<Segment> segments;
  for (int iy = 0; iy + 1 < n; ++iy) {
    for (int ix = 0; ix + 1 < n; ++ix) {
      // corners: 0=(ix,iy) 1=(ix+1,iy) 2=(ix+1,iy+1) 3=(ix,iy+1)
      const int mask = (above(ix, iy) ? 1 : 0) | (above(ix + 1, iy) ? 2 : 0) | (above(ix + 1, iy + 1) ? 4 : 0) |
                       (above(ix, iy + 1) ? 8 : 0);
      if (mask == 0 || mask == 15) continue;
      // sides: bottom, right, top, left
      const int bottom = key(ix, iy, false), right = key(ix + 1, iy, true);
      const int top = key(ix, iy + 1, false), left = key(ix, iy, true);
      auto add = [&](int a, int b) { segments.push_back({{a, b}}); };
      const bool centre = 0.25 * (v(iy, ix) + v(iy, ix + 1) + v(iy + 1, ix + 1) + v(iy + 1, ix)) > level;
      switch (mask) {
        case 1: case 14: add(left, bottom); break;
        case 2: case 13: add(bottom, right); break;
        case 3: case 12: add(left, right); break;
        case 4: case 11: add(right, top); break;
        case 6: case 9: add(bottom, top); break;
        case 7: case 8: add(left, top); break;
        case 5:
          if (centre) { add(left, top); add(bottom, right); }
          else { add(left, bottom); add(right, top); }
          break;
        case 10:
          if (centre) { add(left, bottom); add(right, top); }
          else { add(left, top); add(bottom, right); }
          break;
        default: break;
      }
    }
  }

  auto point_on = [&](const LatticeEdge& e) -> Eigen::Vector2d {
    const Eigen::Vector2d p0 = grid.cell_center(e.ix, e.iy);
    const Eigen::Vector2d p1 = e.vertical ? grid.cell_center(e.ix, e.iy + 1) : grid.cell_center(e.ix + 1, e.iy);
    const double v0 = v(e.iy, e.ix);
    const double v1 = e.vertical ? v(e.iy + 1, e.ix) : v(e.iy, e.ix + 1);
    const double t = (level - v0) / (v1 - v0);
    return p0 + t * (p1 - p0);
  };

  // Each crossed edge belongs to at most two segments.
  std::unordered_map<int, std::array<int, 2>> incident;
  incident.reserve(segments.size() * 2);
  for (int s = 0; s < static_cast<int>(segments.size()); ++s) {
    for (int e : segments[static_cast<std::size_t>(s)].edge) {
      auto [it, fresh] = incident.try_emplace(e, std::array<int, 2>{s, -1});
      if (!fresh) it->second[1] = s;
    }
  }

  std::vector<char> used(segments.size(), 0);
  std::vector<Contour> out;
  auto walk = [&](int start_seg, int start_edge) {
    Contour c;
    c.level = level;
    int seg = start_seg, edge = start_edge;
    c.edges.push_back(decode(edge));
    while (seg >= 0 && !used[static_cast<std::size_t>(seg)]) {
      used[static_cast<std::size_t>(seg)] = 1;
      const auto& s = segments[static_cast<std::size_t>(seg)].edge;
      const int next_edge = s[0] == edge ? s[1] : s[0];
      const auto& inc = incident.at(next_edge);
      const int next_seg = inc[0] == seg ? inc[1] : inc[0];
      if (next_edge == start_edge) {
        c.closed = true;
        break;
      }
      c.edges.push_back(decode(next_edge));
      edge = next_edge;
      seg = next_seg;
    }
    c.points.reserve(c.edges.size());
    for (const auto& e : c.edges) c.points.push_back(point_on(e));
    out.push_back(std::move(c));
  };

  // Open chains start at edges with a single incident segment.
  std::vector<int> ends;
  for (const auto& [e, inc] : incident)
    if (inc[1] < 0) ends.push_back(e);
  std::sort(ends.begin(), ends.end());
  for (int e : ends) {
    const int s = incident.at(e)[0];
    if (!used[static_cast<std::size_t>(s)]) walk(s, e);
  }
  for (int s = 0; s < static_cast<int>(segments.size()); ++s)
    if (!used[static_cast<std::size_t>(s)]) walk(s, segments[static_cast<std::size_t>(s)].edge[0]);
  return out;
}

std::vector<Contour> contour_lines(const DensityGrid& grid, const std::vector<double>& levels) {
  std::vector<Contour> out;
  for (double level : levels) {
    auto part = contour_lines(grid, level);
    out.insert(out.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
  }
  return out;
}

}  // namespace mirror::map
