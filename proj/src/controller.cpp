#include "sharenav/controller.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace sharenav {

std::string_view to_string(ControlMode mode) {
  return mode == ControlMode::SharedControl ? "sc" : "cs";
}

ControlMode parse_control_mode(std::string_view text) {
  if (text == "sc" || text == "shared" || text == "shared_control") {
    return ControlMode::SharedControl;
  }
  if (text == "cs" || text == "switching" || text == "control_switching") {
    return ControlMode::ControlSwitching;
  }
  throw std::invalid_argument("unknown control mode '" + std::string(text) +
                              "' (expected sc or cs)");
}

std::string_view to_string(OmegaMapping mapping) {
  return mapping == OmegaMapping::Multiplicative ? "multiplicative" : "additive";
}

OmegaMapping parse_omega_mapping(std::string_view text) {
  if (text == "multiplicative") return OmegaMapping::Multiplicative;
  if (text == "additive") return OmegaMapping::Additive;
  throw std::invalid_argument("unknown omega mapping '" + std::string(text) +
                              "'");
}

double lever_speed(double jy) { return jy > 0.0 ? 1.0 + 0.5 * jy : 1.0 + jy; }

double omega_limit(double jy) { return jy > 0.0 ? 1.0 : 1.0 + 0.8 * jy; }

UserVelocity map_user_velocity(const JoystickState& j, OmegaMapping mapping) {
  UserVelocity u;
  u.v_h = lever_speed(j.jy);
  if (j.jy > 0.0) {
    u.omega = j.jx;
  } else if (mapping == OmegaMapping::Multiplicative) {
    u.omega = j.jx * (1.0 + 0.8 * j.jy);
  } else {
    u.omega = j.jx + 0.8 * j.jy;
  }
  return u;
}

SpeedLimits speed_limits(const JoystickState& j) {
  return {lever_speed(j.jy), omega_limit(j.jy)};
}

ControlInput track_path(const RobotState& q, const GlobalPath& path,
                        const TrackerConfig& config,
                        const ControlLimits& limits) {
  if (path.empty()) throw std::invalid_argument("track_path on empty path");
  const Vec2 pos = q.position();
  const double to_goal = distance(path.points.back(), pos);
  if (to_goal <= config.goal_tolerance) return {};

  const auto closest = closest_point(path, pos);
  const Vec2 target = path.point_at_arc(closest.arc_position + config.lookahead);
  const Vec2 rel = target - pos;
  const Vec2 heading = q.heading();
  const Vec2 left{-heading.y, heading.x};
  const double alpha = std::atan2(rel.dot(left), rel.dot(heading));

  double v = config.cruise_speed *
             std::min(1.0, to_goal / config.slowdown_radius);
  if (std::abs(alpha) > std::numbers::pi / 2.0) {
    return ControlInput::admissible(0.0, alpha >= 0.0 ? limits.omega_max
                                                      : -limits.omega_max,
                                    limits);
  }
  const double chord = std::max(rel.norm(), 1e-6);
  const double curvature = 2.0 * std::sin(alpha) / chord;
  if (curvature != 0.0) {
    v = std::min(v, limits.omega_max / std::abs(curvature));
  }
  return ControlInput::admissible(v, curvature * v, limits);
}

ControlInput arbitrate(ControlMode mode, const JoystickState& j_delayed,
                       const ControlInput& u_a, OmegaMapping mapping,
                       const ControlLimits& limits) {
  const double v_cap = lever_speed(j_delayed.jy);
  if (mode == ControlMode::ControlSwitching) {
    if (j_delayed.trigger) {
      const auto u_h = map_user_velocity(j_delayed, mapping);
      return ControlInput::admissible(u_h.v_h, u_h.omega, limits);
    }
    return ControlInput::admissible(std::min(u_a.v(), v_cap), u_a.omega(),
                                    limits);
  }
  const double w_cap = omega_limit(j_delayed.jy);
  return ControlInput::admissible(std::min(u_a.v(), v_cap),
                                  std::clamp(u_a.omega(), -w_cap, w_cap),
                                  limits);
}

std::optional<double> filter_event(ControlMode mode,
                                   const JoystickState& previous,
                                   const JoystickState& current) {
  if (mode != ControlMode::SharedControl) return std::nullopt;
  if (previous.trigger && !current.trigger) return 5.0 * current.jx;
  return std::nullopt;
}

}  // namespace sharenav
