#include "sharenav/path.hpp"

#include <stdexcept>

namespace sharenav {

double GlobalPath::length() const {
  return points.empty() ? 0.0 : arc_position(points.size() - 1);
}

double GlobalPath::arc_position(std::size_t index) const {
  double s = 0.0;
  for (std::size_t i = 1; i <= index && i < points.size(); ++i) {
    s += distance(points[i - 1], points[i]);
  }
  return s;
}

Vec2 GlobalPath::point_at_arc(double s) const {
  if (points.empty()) throw std::logic_error("point_at_arc on empty path");
  if (s <= 0.0) return points.front();
  for (std::size_t i = 1; i < points.size(); ++i) {
    const double seg = distance(points[i - 1], points[i]);
    if (s <= seg && seg > 0.0) {
      return points[i - 1] + (points[i] - points[i - 1]) * (s / seg);
    }
    s -= seg;
  }
  return points.back();
}

ClosestPoint closest_point(const GlobalPath& path, Vec2 position) {
  if (path.empty()) throw std::invalid_argument("closest_point on empty path");
  ClosestPoint best{0, path.points.front(), 0.0};
  double best_d2 = (path.points.front() - position).squared_norm();
  double arc = 0.0;
  for (std::size_t i = 1; i < path.points.size(); ++i) {
    arc += distance(path.points[i - 1], path.points[i]);
    const double d2 = (path.points[i] - position).squared_norm();
    if (d2 < best_d2) {
      best_d2 = d2;
      best = {i, path.points[i], arc};
    }
  }
  return best;
}

}  // namespace sharenav
