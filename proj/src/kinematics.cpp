#include "sharenav/kinematics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sharenav {

Vec2 RobotState::heading() const { return {std::cos(theta), std::sin(theta)}; }

Vec2 RobotState::lateral_axis() const { return right_of(heading()); }

ControlInput ControlInput::admissible(double v, double omega,
                                      const ControlLimits& limits) {
  if (!std::isfinite(v) || !std::isfinite(omega)) {
    throw std::invalid_argument("control input must be finite");
  }
  return {std::clamp(v, 0.0, limits.v_max),
          std::clamp(omega, -limits.omega_max, limits.omega_max)};
}

RobotState step_kinematics(const RobotState& q, const ControlInput& u,
                           double dt) {
  RobotState next = q;
  next.x = q.x + u.v() * std::cos(q.theta) * dt;
  next.y = q.y + u.v() * std::sin(q.theta) * dt;
  next.theta = wrap_angle(q.theta + u.omega() * dt);
  next.v_actual = u.v();
  next.omega_actual = u.omega();
  return next;
}

SimClock::SimClock(double dt) : dt_(dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
}

}  // namespace sharenav
