#pragma once

namespace sharenav {

/// Operator input. `jx` is the stick's horizontal axis, `jy` the speed
/// lever (0 = middle). Axes are clamped to [-1, 1] by `make`.
struct JoystickState {
  double jx = 0.0;
  double jy = 0.0;
  bool trigger = false;
  bool mode_button = false;

  static JoystickState make(double jx, double jy, bool trigger,
                            bool mode_button = false);
  static constexpr JoystickState neutral() { return {}; }

  bool operator==(const JoystickState&) const = default;
};

}  // namespace sharenav
