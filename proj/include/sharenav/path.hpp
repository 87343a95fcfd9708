#pragma once

#include <cstddef>
#include <vector>

#include "sharenav/geometry.hpp"
#include "sharenav/kinematics.hpp"

namespace sharenav {

/// Planner output: grid cell centers from start to goal.
struct GlobalPath {
  std::vector<Vec2> points;
  double cost = 0.0;  // sum of edge costs, meters-equivalent

  bool empty() const { return points.empty(); }
  double length() const;
  /// Arc length from the first point up to vertex `index`.
  double arc_position(std::size_t index) const;
  /// Point at arc length `s` (clamped to the path ends).
  Vec2 point_at_arc(double s) const;
};

struct ClosestPoint {
  std::size_t index = 0;
  Vec2 point;
  double arc_position = 0.0;
};

/// Euclidean-closest vertex; ties go to the earlier vertex.
ClosestPoint closest_point(const GlobalPath& path, Vec2 position);

}  // namespace sharenav
