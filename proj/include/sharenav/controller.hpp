#pragma once

#include <optional>
#include <string_view>

#include "sharenav/joystick.hpp"
#include "sharenav/kinematics.hpp"
#include "sharenav/path.hpp"

namespace sharenav {

enum class ControlMode { SharedControl, ControlSwitching };

std::string_view to_string(ControlMode mode);
/// Accepts "sc" / "cs" (and the long names). Throws std::invalid_argument.
ControlMode parse_control_mode(std::string_view text);

/// How the stick's horizontal axis turns into an angular rate when the
/// lever is pulled below center.
enum class OmegaMapping {
  Multiplicative,  // omega = jx * (1 + 0.8 jy)
  Additive,        // omega = jx + 0.8 jy
};

std::string_view to_string(OmegaMapping mapping);
OmegaMapping parse_omega_mapping(std::string_view text);

/// User-defined speed caps derived from the joystick.
struct SpeedLimits {
  double v_h = 1.0;
  double omega_h = 1.0;
};

struct UserVelocity {
  double v_h = 0.0;
  double omega = 0.0;
};

/// Lever and stick to (v_h, omega). v_h is 1 m/s at center, 1.5 at the top,
/// 0 at the bottom.
UserVelocity map_user_velocity(const JoystickState& j,
                               OmegaMapping mapping = OmegaMapping::Multiplicative);

/// Linear speed cap from the lever alone.
double lever_speed(double jy);

/// Turn-rate cap in shared control: the mapping at full stick deflection.
double omega_limit(double jy);

SpeedLimits speed_limits(const JoystickState& j);

struct TrackerConfig {
  double lookahead = 0.8;        // m
  double cruise_speed = 1.0;     // m/s
  double goal_tolerance = 0.5;   // m
  double slowdown_radius = 1.5;  // m, linear deceleration inside
};

/// Pure pursuit toward the path point `lookahead` meters past the closest
/// vertex. Speed is reduced near the path end and wherever the commanded
/// curvature would exceed the turn-rate limit; a target behind the robot
/// makes it turn in place. Returns (0, 0) within goal tolerance of the end.
ControlInput track_path(const RobotState& q, const GlobalPath& path,
                        const TrackerConfig& config = {},
                        const ControlLimits& limits = {});

/// Chooses the applied control.
///  - ControlSwitching, trigger held: the joystick mapping, verbatim.
///  - ControlSwitching, trigger up: u_a with v capped by the lever.
///  - SharedControl: u_a with v capped by the lever and |omega| by
///    omega_limit. Raw joystick velocities are never passed through.
ControlInput arbitrate(ControlMode mode, const JoystickState& j_delayed,
                       const ControlInput& u_a,
                       OmegaMapping mapping = OmegaMapping::Multiplicative,
                       const ControlLimits& limits = {});

/// In shared control, a trigger release (previous held, current up) places
/// a cost filter at d = 5 * jx. Anything else yields no event.
std::optional<double> filter_event(ControlMode mode,
                                   const JoystickState& previous,
                                   const JoystickState& current);

}  // namespace sharenav
