#include "sharenav/delay_line.hpp"

#include <algorithm>
#include <stdexcept>

#include "sharenav/kinematics.hpp"

namespace sharenav {

JoystickState JoystickState::make(double jx, double jy, bool trigger,
                                  bool mode_button) {
  return {std::clamp(jx, -1.0, 1.0), std::clamp(jy, -1.0, 1.0), trigger,
          mode_button};
}

DelayLine::DelayLine(double latency) : latency_(latency) {
  if (!(latency >= 0.0)) throw std::invalid_argument("latency must be >= 0");
}

void DelayLine::push(double t, const JoystickState& j) {
  queue_.push_back({t, j});
}

JoystickState DelayLine::poll(double t) {
  drain(t);
  return current_;
}

std::vector<JoystickState> DelayLine::drain(double t) {
  std::vector<JoystickState> released;
  while (!queue_.empty() && queue_.front().time + latency_ <= t + kTimeEpsilon) {
    released.push_back(queue_.front().state);
    queue_.pop_front();
  }
  if (!released.empty()) current_ = released.back();
  return released;
}

void DelayLine::reset(const JoystickState& j) {
  queue_.clear();
  current_ = j;
}

}  // namespace sharenav
