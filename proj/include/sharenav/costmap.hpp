#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "sharenav/geometry.hpp"
#include "sharenav/kinematics.hpp"
#include "sharenav/path.hpp"
#include "sharenav/world.hpp"

namespace sharenav {

inline constexpr std::uint8_t kLethalCost = 255;

struct Cell {
  int i = 0;  // column, along world x
  int j = 0;  // row, along world y
  bool operator==(const Cell&) const = default;
};

/// Discretized position space. Cell (i, j) is centered at
/// origin + (i, j) * resolution.
struct GridSpec {
  Vec2 origin;
  double resolution = 0.1;
  int width = 0;
  int height = 0;

  /// Smallest grid whose cell centers span `bounds`.
  static GridSpec covering(const Bounds& bounds, double resolution = 0.1);

  std::size_t size() const {
    return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  }
  bool contains(Cell c) const {
    return c.i >= 0 && c.j >= 0 && c.i < width && c.j < height;
  }
  std::size_t index(Cell c) const {
    return static_cast<std::size_t>(c.j) * static_cast<std::size_t>(width) +
           static_cast<std::size_t>(c.i);
  }
  Cell cell_of(std::size_t index) const {
    return {static_cast<int>(index % static_cast<std::size_t>(width)),
            static_cast<int>(index / static_cast<std::size_t>(width))};
  }
  Vec2 center(Cell c) const {
    return {origin.x + c.i * resolution, origin.y + c.j * resolution};
  }
  /// Nearest cell to a world point; nullopt outside the grid.
  std::optional<Cell> cell_at(Vec2 p) const;

  bool operator==(const GridSpec&) const = default;
};

/// Per-cell lethal flags from obstacle inflation.
struct LethalMask {
  GridSpec grid;
  std::vector<std::uint8_t> lethal;  // 0 or 1, row-major

  bool at(Cell c) const { return lethal[grid.index(c)] != 0; }
  std::size_t count() const;
};

/// Quantized planning costs in [0, 255]; 255 is lethal.
struct Costmap {
  GridSpec grid;
  std::vector<std::uint8_t> cells;  // row-major

  std::uint8_t at(Cell c) const { return cells[grid.index(c)]; }
  bool lethal(Cell c) const { return at(c) == kLethalCost; }
  bool operator==(const Costmap&) const = default;
};

/// Cells whose centers lie within `robot_radius` of any shape (discrete
/// Minkowski sum with a disk).
LethalMask inflate_obstacles(std::span<const Shape> shapes,
                             double robot_radius, const GridSpec& grid);

/// Convenience overload: every obstacle currently in `sensed`.
LethalMask inflate_obstacles(const WorldModel& world,
                             const SensedObstacles& sensed,
                             double robot_radius, const GridSpec& grid);

/// Marks cells within `robot_radius` of the world boundary as lethal, so the
/// boundary acts as a wall.
void inflate_bounds(LethalMask& mask, const Bounds& bounds,
                    double robot_radius);

/// Lethal cells get 255; free cells round(254 * exp(-gamma * delta)) where
/// delta is the distance in meters to the nearest lethal cell center.
Costmap compute_obstacle_cost(const LethalMask& mask, double gamma = 2.0);

/// Shape of the user-input cost valley.
struct CostFilterParams {
  double d = 0.0;    // signed lateral offset, m (positive = right)
  double w = 3.0;    // valley width, m
  double l = 5.0;    // valley length, m
  double s = 100.0;  // strength, [0, 255]
  double p = 1.2;    // preferred-side multiplier, >= 1

  /// Throws std::invalid_argument when outside the admissible ranges.
  void validate() const;
  bool operator==(const CostFilterParams&) const = default;
};

/// Reference frame of the cost valley. `y_axis` follows the path, `x_axis`
/// points to its right.
struct CostFrame {
  Vec2 origin;
  Vec2 x_axis{1.0, 0.0};
  Vec2 y_axis{0.0, 1.0};

  Vec2 to_frame(Vec2 world) const {
    const Vec2 r = world - origin;
    return {r.dot(x_axis), r.dot(y_axis)};
  }
  Vec2 to_world(Vec2 local) const {
    return origin + x_axis * local.x + y_axis * local.y;
  }
  bool operator==(const CostFrame&) const = default;
};

/// Direction of the total-least-squares line through the path points that
/// start at the vertex closest to the robot and span `arc_len` meters.
Vec2 fit_direction(const GlobalPath& path, const RobotState& q,
                   double arc_len = 5.0);

CostFrame build_cost_frame(const RobotState& q, double d, Vec2 direction);

double sigmoid(double t);

/// Lateral valley profile. `side` is +1 when the preferred side is +c_x,
/// -1 for -c_x; with p = 1 the side does not matter.
double f_lat(double c_x, double w, double p, int side);

/// Longitudinal band: rises around c_y = -0.5 and falls around c_y = l.
double f_lon(double c_y, double l);

/// Filter value in frame coordinates, rounded to an integer in [0, 255].
int g_ui_local(Vec2 local, const CostFilterParams& params);

int g_ui_at(Vec2 world_point, const CostFrame& frame,
            const CostFilterParams& params);

struct UserCostFilter {
  CostFrame frame;
  CostFilterParams params;
  bool operator==(const UserCostFilter&) const = default;
};

/// Per cell min(255, max(g_obs, g_obs + g_ui)).
Costmap compose(const Costmap& g_obs,
                const std::optional<UserCostFilter>& filter);

/// Debug dump: one CSV line per grid row (j = 0 first), integers only.
void write_costmap_csv(const Costmap& costmap, std::ostream& out);
/// Sidecar for the CSV: origin, resolution and dimensions.
nlohmann::json costmap_header(const Costmap& costmap);

}  // namespace sharenav
