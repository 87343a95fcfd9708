#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sharenav/controller.hpp"
#include "sharenav/costmap.hpp"
#include "sharenav/delay_line.hpp"
#include "sharenav/planner.hpp"
#include "sharenav/world.hpp"

namespace sharenav {

enum class RadiationMetric {
  Intensity,  // pool intensity at the robot, integrated over time
  Distance,   // distance to the closest pool rim, integrated over time
};

std::string_view to_string(RadiationMetric metric);
RadiationMetric parse_radiation_metric(std::string_view text);

struct SimConfig {
  double dt = 0.05;
  double latency = 1.0;         // operator input delay, s
  double state_delay = 0.0;     // delay on state shown to the operator, s
  double replan_period = 0.5;   // s
  double sensor_range = 8.0;    // m
  double robot_radius = 0.35;   // inflation radius, m
  double body_radius = 0.25;    // footprint used for clearance, m
  double resolution = 0.1;      // m per cell
  double decay_gamma = 2.0;     // 1/m
  double fit_length = 5.0;      // m of path used for the frame direction
  double timeout = 600.0;       // s
  PlannerConfig planner;
  CostFilterParams filter;      // w, l, s, p defaults; d comes from input
  TrackerConfig tracker;
  ControlLimits limits;
  OmegaMapping omega_mapping = OmegaMapping::Multiplicative;
  RadiationMetric radiation_metric = RadiationMetric::Intensity;

  /// Throws std::invalid_argument on inconsistent values.
  void validate() const;
  std::int64_t replan_period_ticks() const;
};

/// Applies the keys present in `doc` on top of `base`. Unknown keys are a
/// ParseError.
SimConfig config_from_json(const nlohmann::json& doc, SimConfig base = {});
nlohmann::json config_to_json(const SimConfig& config);
SimConfig load_config_file(const std::filesystem::path& path,
                           SimConfig base = {});

struct InputEvent {
  double t = 0.0;
  JoystickState joystick;
  bool operator==(const InputEvent&) const = default;
};

/// Scripted operator: events with strictly increasing timestamps.
using InputTrace = std::vector<InputEvent>;

void validate_trace(const InputTrace& trace);
/// JSON lines: {"t": float, "jx": float, "jy": float, "trigger": bool}.
InputTrace read_trace(std::istream& in);
InputTrace load_trace_file(const std::filesystem::path& path);
void write_trace(const InputTrace& trace, std::ostream& out);

struct RunRow {
  std::int64_t tick = 0;
  double t = 0.0;
  RobotState pose;
  ControlInput u;
  JoystickState joystick;  // applied (delayed) operator state
  std::optional<UserCostFilter> filter;
  double radiation = 0.0;

  bool operator==(const RunRow&) const = default;
};

struct RunSummary {
  bool reached_goal = false;
  bool timed_out = false;
  double completion_time = 0.0;
  double cumulative_radiation = 0.0;
  std::optional<double> min_clearance;
  std::int64_t ticks = 0;
  std::int64_t replans = 0;
  std::int64_t failed_plans = 0;
  ControlMode mode = ControlMode::SharedControl;
  double dt = 0.05;
  RadiationMetric radiation_metric = RadiationMetric::Intensity;

  bool operator==(const RunSummary&) const = default;
};

struct RunRecord {
  std::vector<RunRow> rows;
  RunSummary summary;
  bool operator==(const RunRecord&) const = default;
};

/// Left Riemann sum of the per-row radiation.
double cumulative_radiation(const RunRecord& record);
/// Smallest clearance over the rows, or nullopt for an obstacle-free world.
std::optional<double> min_clearance(const WorldModel& world,
                                    const RunRecord& record,
                                    double body_radius);

nlohmann::json row_to_json(const RunRow& row, ControlMode mode);
nlohmann::json summary_to_json(const RunSummary& summary);
/// JSON lines: one "row" object per tick, then a "summary" object.
void write_record(const RunRecord& record, std::ostream& out);
RunRecord read_record(std::istream& in);

/// Obstacle part of the planning costmap for what the robot currently
/// knows: inflated sensed obstacles, the world boundary as a wall, decay.
Costmap obstacle_costmap(const WorldModel& world, const SensedObstacles& sensed,
                         const SimConfig& config);

/// Observer hooks, mainly for verification harnesses.
struct SimHooks {
  std::function<void(const Costmap&, const PlanResult&)> on_plan;
};

/// Tick-driven simulation of one run. Single-threaded; all operator input
/// goes through `enqueue_input` and takes effect at tick boundaries.
class Simulation {
 public:
  Simulation(WorldModel world, ControlMode mode, SimConfig config = {},
             SimHooks hooks = {});

  /// Queues operator input stamped at `t` (or at the current time). Inputs
  /// are applied in arrival order once the clock reaches their stamp, and
  /// reach the controller `latency` seconds later.
  void enqueue_input(const JoystickState& j, std::optional<double> t = {});

  /// Drops all queued and in-flight input and applies the neutral state
  /// immediately, without producing a trigger-release event.
  void inject_neutral();

  /// Advances one tick. No-op once the run is finished.
  void step();
  void run_to_completion();

  bool finished() const { return finished_; }
  std::int64_t tick() const { return clock_.tick(); }
  double time() const { return clock_.time(); }
  const WorldModel& world() const { return world_; }
  const SimConfig& config() const { return config_; }
  ControlMode mode() const { return mode_; }
  const RobotState& state() const { return state_; }
  const GlobalPath& path() const { return path_; }
  const std::optional<UserCostFilter>& filter() const { return filter_; }
  const SensedObstacles& sensed() const { return sensed_; }
  const JoystickState& applied_joystick() const { return applied_; }
  ControlInput last_control() const { return last_u_; }
  double radiation() const;
  double cumulative_radiation() const { return record_.summary.cumulative_radiation; }
  const RunRecord& record() const { return record_; }

  /// Composed costmap used by the latest plan.
  const Costmap& costmap() const { return composed_; }

 private:
  void finish(bool reached);
  void apply_inputs();
  void update_filter_expiry();
  void replan();
  double metric_at(Vec2 p) const;

  WorldModel world_;
  ControlMode mode_;
  SimConfig config_;
  SimHooks hooks_;
  SimClock clock_;
  RobotState state_;
  SensedObstacles sensed_;
  DelayLine delay_;
  std::deque<InputEvent> pending_;
  double last_push_time_ = 0.0;
  JoystickState applied_{};
  std::optional<UserCostFilter> filter_;
  GridSpec grid_;
  Costmap obstacle_cost_;
  Costmap composed_;
  bool obstacle_cost_dirty_ = true;
  bool replan_requested_ = true;
  GlobalPath path_;
  ControlInput last_u_{};
  RunRecord record_;
  bool finished_ = false;
};

/// Runs `trace` against `world` headlessly until the goal is reached or the
/// timeout expires. A timeout is reported in the summary, not thrown.
RunRecord run(const WorldModel& world, ControlMode mode,
              const InputTrace& trace, const SimConfig& config = {},
              SimHooks hooks = {});

}  // namespace sharenav
