#pragma once

#include <cstdint>

#include "sharenav/geometry.hpp"

namespace sharenav {

/// Configuration q = (x, y, theta) plus the last applied velocities.
struct RobotState {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;  // (-pi, pi]
  double v_actual = 0.0;
  double omega_actual = 0.0;

  Vec2 position() const { return {x, y}; }
  Vec2 heading() const;
  /// Robot-frame lateral axis in world coordinates: 90 degrees clockwise
  /// from the heading, so positive offsets are to the robot's right.
  Vec2 lateral_axis() const;

  bool operator==(const RobotState&) const = default;
};

/// Actuation bounds defining the admissible control set.
struct ControlLimits {
  double v_max = 1.5;
  double omega_max = 1.0;
};

/// Control input u = (v, omega). Always inside the admissible set: the only
/// way to build one is through `admissible`, which clamps.
class ControlInput {
 public:
  constexpr ControlInput() = default;

  static ControlInput admissible(double v, double omega,
                                 const ControlLimits& limits = {});

  constexpr double v() const { return v_; }
  constexpr double omega() const { return omega_; }

  bool operator==(const ControlInput&) const = default;

 private:
  constexpr ControlInput(double v, double omega) : v_(v), omega_(omega) {}
  double v_ = 0.0;
  double omega_ = 0.0;
};

/// One explicit Euler step of the unicycle model.
RobotState step_kinematics(const RobotState& q, const ControlInput& u,
                           double dt);

/// Fixed-step clock. Time is always tick * dt, never accumulated.
class SimClock {
 public:
  explicit SimClock(double dt = 0.05);

  double dt() const { return dt_; }
  std::int64_t tick() const { return tick_; }
  double time() const { return time_at(tick_); }
  double time_at(std::int64_t tick) const {
    return static_cast<double>(tick) * dt_;
  }
  void advance() { ++tick_; }
  void reset() { tick_ = 0; }

 private:
  double dt_;
  std::int64_t tick_ = 0;
};

/// Slack used wherever a simulated time is compared against an event time,
/// so decimal timestamps that land on the tick grid match their tick.
inline constexpr double kTimeEpsilon = 1e-9;

}  // namespace sharenav
