#pragma once

#include <deque>
#include <vector>

#include "sharenav/joystick.hpp"

namespace sharenav {

/// FIFO that releases operator input `latency` seconds after it was pushed.
/// Callers must feed non-decreasing times to both push and poll.
class DelayLine {
 public:
  explicit DelayLine(double latency = 1.0);

  double latency() const { return latency_; }

  void push(double t, const JoystickState& j);

  /// Latest state whose release time (push time + latency) is <= t, or the
  /// neutral state before anything has matured.
  JoystickState poll(double t);

  /// Pops every entry that matured by `t`, oldest first. The last one also
  /// becomes the value later `poll` calls return.
  std::vector<JoystickState> drain(double t);

  /// Drops all pending entries and makes `j` current.
  void reset(const JoystickState& j = JoystickState::neutral());

  std::size_t pending() const { return queue_.size(); }

 private:
  struct Entry {
    double time;
    JoystickState state;
  };

  double latency_;
  std::deque<Entry> queue_;
  JoystickState current_{};
};

}  // namespace sharenav
