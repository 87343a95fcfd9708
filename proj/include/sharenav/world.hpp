#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "sharenav/geometry.hpp"
#include "sharenav/kinematics.hpp"

namespace sharenav {

struct Circle {
  Vec2 center;
  double radius = 0.0;
};

struct Polygon {
  std::vector<Vec2> points;  // closed implicitly, either winding
};

using Shape = std::variant<Circle, Polygon>;

/// Signed distance from `p` to the shape boundary, negative inside.
double signed_distance(const Shape& shape, Vec2 p);

struct Obstacle {
  std::string id;
  Shape shape;
  bool a_priori = true;  // known to the robot before the run starts
};

/// Toxic pool. Intensity ramps linearly from `intensity` at the rim down to
/// zero `fade` meters outside it.
struct Pool {
  std::string id;
  Vec2 center;
  double radius = 1.0;
  double intensity = 1.0;
  double fade = 3.0;
};

struct Bounds {
  Vec2 min;
  Vec2 max;

  bool contains(Vec2 p) const {
    return p.x >= min.x && p.x <= max.x && p.y >= min.y && p.y <= max.y;
  }
};

struct WorldModel {
  std::string name;
  Bounds bounds;
  std::vector<Obstacle> obstacles;
  std::vector<Pool> pools;
  RobotState start;
  Vec2 goal;
};

/// Throws ValidationError naming the first offending entity.
void validate(const WorldModel& world);

/// Parses and validates. Throws ParseError on schema problems.
WorldModel world_from_json(const nlohmann::json& doc);
nlohmann::json world_to_json(const WorldModel& world);
WorldModel load_world(std::string_view text);
WorldModel load_world_file(const std::filesystem::path& path);

/// Pool intensity summed over all pools at `p`.
double radiation_at(const WorldModel& world, Vec2 p);

/// Distance from `p` to the nearest pool rim (0 inside a pool), or nullopt
/// when the world has no pools.
std::optional<double> closest_pool_distance(const WorldModel& world, Vec2 p);

/// Smallest signed distance from `p` to any true obstacle shape, or nullopt
/// for an obstacle-free world.
std::optional<double> obstacle_clearance(const WorldModel& world, Vec2 p);

/// What the robot knows about the world's obstacles and pools. Indices refer
/// to WorldModel::obstacles / WorldModel::pools. Knowledge only grows.
class SensedObstacles {
 public:
  SensedObstacles() = default;
  /// Knowledge before the run: every a-priori obstacle.
  static SensedObstacles initial(const WorldModel& world,
                                 double sensor_range = 8.0);
  /// Full knowledge of every obstacle and pool.
  static SensedObstacles all(const WorldModel& world, double sensor_range = 8.0);

  double sensor_range() const { return sensor_range_; }
  bool knows_obstacle(std::size_t i) const { return obstacles_.at(i); }
  bool knows_pool(std::size_t i) const { return pools_.at(i); }
  std::size_t size() const;
  std::vector<std::size_t> known_obstacles() const;
  std::vector<std::size_t> known_pools() const;

  bool operator==(const SensedObstacles&) const = default;

 private:
  friend SensedObstacles sense(const WorldModel&, const RobotState&,
                               const SensedObstacles&);
  double sensor_range_ = 8.0;
  std::vector<bool> obstacles_;
  std::vector<bool> pools_;
};

/// Adds every entity whose boundary lies within sensor range of the robot.
SensedObstacles sense(const WorldModel& world, const RobotState& q,
                      const SensedObstacles& known);

}  // namespace sharenav
