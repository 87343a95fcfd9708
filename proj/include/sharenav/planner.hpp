#pragma once

#include <cstdint>
#include <optional>

#include "sharenav/costmap.hpp"
#include "sharenav/path.hpp"

namespace sharenav {

/// Edge costs are kept in integer units so that search order and totals are
/// exact: a straight step is kStraightUnits * (255 + beta * g) and a diagonal
/// step kDiagonalUnits * (255 + beta * g), where g is the destination cost.
inline constexpr std::int64_t kStraightUnits = 10'000'000;
inline constexpr std::int64_t kDiagonalUnits = 14'142'136;  // sqrt(2) * 1e7

struct PlannerConfig {
  int cost_weight = 25;  // beta
};

inline std::int64_t edge_cost_units(bool diagonal, std::uint8_t dest_cost,
                                    int cost_weight) {
  return (diagonal ? kDiagonalUnits : kStraightUnits) *
         (255 + static_cast<std::int64_t>(cost_weight) * dest_cost);
}

/// Converts integer path cost back to meters-equivalent
/// (sum of step_length * (1 + beta * g / 255)).
inline double cost_units_to_meters(std::int64_t units, double resolution) {
  return static_cast<double>(units) * resolution /
         (static_cast<double>(kStraightUnits) * 255.0);
}

struct PlanRequest {
  Vec2 start;
  Vec2 goal;
  const Costmap* costmap = nullptr;
};

struct PlanResult {
  GlobalPath path;
  std::int64_t cost_units = 0;
  std::size_t expanded = 0;
};

/// A* over the 8-connected grid with the octile heuristic. Ties are broken
/// by (f, h, cell index). Throws std::invalid_argument if start or goal is
/// off-grid or lethal, NoPathError when the goal is unreachable.
PlanResult plan(const PlanRequest& req, const PlannerConfig& config = {});

/// Nearest non-lethal cell by breadth-first search over 8-neighbors.
std::optional<Cell> nearest_free_cell(const Costmap& costmap, Cell from);

}  // namespace sharenav
